"""Mean-field decoupling of the Hubbard interaction with a Holstein
distortion potential, and the self-consistent ground-state solver.

The quartic term U n_up n_dn decouples into one-body potentials built
from the average densities: spin-sigma electrons at site i feel

    -g R_i + U (n_i / 2 -+ sz_i)

plus, in noncollinear mode, the spin-off-diagonal terms -U sp_i / -U sm_i.
The double-counting constant U sum(sz^2 + sp*sm - n^2/4) restores the
variational energy.  Filling is fixed at 7 spin-up and 8 spin-down
electrons (one spin-up hole in the 16-site half-filled cell) unless
overridden in the options.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ScfConvergenceError
from .lattice import (
    DisplacementField,
    LatticeGeometry,
    elastic_energy,
    holstein_coordinate,
)
from .numerics import eig_sym

__all__ = [
    "ModelParams",
    "MeanFieldDensities",
    "SlaterState",
    "NoncollinearState",
    "ScfOptions",
    "ScfReport",
    "neel_densities",
    "build_hf_hamiltonian",
    "densities_from_state",
    "total_energy",
    "scf_solve",
    "homo_lumo_gap",
    "frontier_levels",
    "translate_state",
]

GAP_FLOOR = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the hole-phonon model, in units of the hopping t."""

    u: float
    g: float
    k_spring: float = 1.0
    t: float = 1.0
    d: float = 0.1
    mode: str = "collinear"

    def __post_init__(self):
        if self.t <= 0.0:
            raise ValueError(f"hopping t must be positive, got {self.t}")
        if self.u < 0.0 or self.g < 0.0 or self.k_spring < 0.0:
            raise ValueError("U, g and K must be non-negative")
        if self.mode not in ("collinear", "noncollinear"):
            raise ValueError(f"mode must be collinear or noncollinear, got {self.mode!r}")


@dataclass
class MeanFieldDensities:
    """Average charge and spin densities per site.

    ``sp``/``sm`` are the transverse components <S_+> and <S_->; for real
    wavefunctions they are equal, and in collinear mode identically zero.
    """

    n: np.ndarray
    sz: np.ndarray
    sp: np.ndarray
    sm: np.ndarray

    def copy(self) -> "MeanFieldDensities":
        return MeanFieldDensities(
            self.n.copy(), self.sz.copy(), self.sp.copy(), self.sm.copy()
        )

    def residual(self, other: "MeanFieldDensities") -> float:
        """Max-norm difference over all density components."""
        return max(
            float(np.max(np.abs(self.n - other.n))),
            float(np.max(np.abs(self.sz - other.sz))),
            float(np.max(np.abs(self.sp - other.sp))),
            float(np.max(np.abs(self.sm - other.sm))),
        )

    def mixed_with(self, new: "MeanFieldDensities", alpha: float) -> "MeanFieldDensities":
        """Linear mixing (1 - alpha)*self + alpha*new."""
        return MeanFieldDensities(
            (1.0 - alpha) * self.n + alpha * new.n,
            (1.0 - alpha) * self.sz + alpha * new.sz,
            (1.0 - alpha) * self.sp + alpha * new.sp,
            (1.0 - alpha) * self.sm + alpha * new.sm,
        )


@dataclass
class SlaterState:
    """Converged collinear determinant: occupied orbitals per spin sector
    (rows), the full single-particle spectra, and the total energy.

    ``up_occupied``/``down_occupied`` record which spectrum entries the
    orbital rows correspond to; the default Aufbau filling occupies the
    lowest levels, branch-pinned filling may not.
    """

    up_orbitals: np.ndarray
    down_orbitals: np.ndarray
    up_spectrum: np.ndarray
    down_spectrum: np.ndarray
    e_total: float
    up_occupied: np.ndarray | None = None
    down_occupied: np.ndarray | None = None

    def occupied_indices(self) -> tuple[np.ndarray, np.ndarray]:
        up = (
            self.up_occupied
            if self.up_occupied is not None
            else np.arange(self.up_orbitals.shape[0])
        )
        down = (
            self.down_occupied
            if self.down_occupied is not None
            else np.arange(self.down_orbitals.shape[0])
        )
        return up, down


@dataclass
class NoncollinearState:
    """Converged spin-mixed determinant: 15 occupied spinor orbitals (rows,
    dimension 32 = up sites then down sites), spectrum, occupied indices."""

    orbitals: np.ndarray
    spectrum: np.ndarray
    occupied: np.ndarray
    e_total: float


@dataclass(frozen=True)
class ScfOptions:
    """Knobs of the self-consistency loop.

    ``adaptive_mixing`` halves the mixing parameter when the energy
    oscillates while the residual grows; it is off by default because the
    perturbed iterates can land fragile weak-coupling samples on a
    different self-consistent solution (branch-pinned retries handle the
    stalls it was meant for).
    """

    tol: float = 1e-8
    max_iter: int = 500
    mixing: float = 0.5
    n_up: int = 7
    n_down: int = 8
    fill_reference: tuple[np.ndarray, np.ndarray] | None = None
    adaptive_mixing: bool = False


@dataclass
class ScfReport:
    iterations: int
    residual: float
    converged: bool
    energy_history: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def neel_densities(
    geometry: LatticeGeometry,
    n_up: int = 7,
    n_down: int = 8,
    amplitude: float = 0.4,
) -> MeanFieldDensities:
    """Staggered starting guess: uniform filling with an alternating
    ``+-amplitude`` spin pattern, transverse components zero."""
    n_sites = geometry.n_sites
    filling = (n_up + n_down) / n_sites
    signs = geometry.staggered_signs()
    zeros = np.zeros(n_sites)
    return MeanFieldDensities(
        np.full(n_sites, filling), amplitude * signs, zeros.copy(), zeros.copy()
    )


def _hopping_matrix(geometry: LatticeGeometry, t: float) -> np.ndarray:
    h = np.zeros((geometry.n_sites, geometry.n_sites))
    for i, j in geometry.neighbor_bonds():
        h[i, j] -= t
        h[j, i] -= t
    return h


def build_hf_hamiltonian(
    params: ModelParams,
    holstein: np.ndarray,
    densities: MeanFieldDensities,
    geometry: LatticeGeometry | None = None,
):
    """One-body mean-field Hamiltonian for the given distortion coordinates.

    Collinear mode returns the pair ``(h_up, h_down)`` of real symmetric
    site-space matrices; noncollinear mode returns one ``2n x 2n`` matrix
    whose off-diagonal spin blocks carry ``-U sp`` / ``-U sm``.
    """
    geometry = geometry or LatticeGeometry()
    hop = _hopping_matrix(geometry, params.t)
    site_potential = -params.g * np.asarray(holstein, dtype=float)
    h_up = hop + np.diag(site_potential + params.u * (0.5 * densities.n - densities.sz))
    h_down = hop + np.diag(site_potential + params.u * (0.5 * densities.n + densities.sz))
    if params.mode == "collinear":
        return h_up, h_down
    n = geometry.n_sites
    h = np.zeros((2 * n, 2 * n))
    h[:n, :n] = h_up
    h[n:, n:] = h_down
    h[:n, n:] = np.diag(-params.u * densities.sm)
    h[n:, :n] = np.diag(-params.u * densities.sp)
    return h


def densities_from_state(state) -> MeanFieldDensities:
    """Charge and spin densities of a converged determinant."""
    if isinstance(state, SlaterState):
        n_up = np.sum(state.up_orbitals**2, axis=0)
        n_down = np.sum(state.down_orbitals**2, axis=0)
        zeros = np.zeros_like(n_up)
        return MeanFieldDensities(
            n_up + n_down, 0.5 * (n_up - n_down), zeros.copy(), zeros.copy()
        )
    if isinstance(state, NoncollinearState):
        half = state.orbitals.shape[1] // 2
        up = state.orbitals[:, :half]
        down = state.orbitals[:, half:]
        n_up = np.sum(up**2, axis=0)
        n_down = np.sum(down**2, axis=0)
        sp = np.sum(up * down, axis=0)
        return MeanFieldDensities(n_up + n_down, 0.5 * (n_up - n_down), sp, sp.copy())
    raise TypeError(f"unsupported state type {type(state).__name__}")


def _occupied_energy(state) -> float:
    if isinstance(state, SlaterState):
        occ_up, occ_down = state.occupied_indices()
        return float(
            np.sum(state.up_spectrum[occ_up]) + np.sum(state.down_spectrum[occ_down])
        )
    return float(np.sum(state.spectrum[state.occupied]))


def total_energy(
    state,
    densities: MeanFieldDensities,
    params: ModelParams,
    displacement: DisplacementField,
) -> float:
    """Variational energy: occupied orbital sum, double-counting
    correction U*sum(sz^2 + sp*sm - n^2/4), and the elastic term."""
    correction = params.u * float(
        np.sum(densities.sz**2 + densities.sp * densities.sm - 0.25 * densities.n**2)
    )
    return _occupied_energy(state) + correction + elastic_energy(
        displacement, params.k_spring
    )


def _fill_indices(vectors: np.ndarray, count: int, reference: np.ndarray | None):
    """Occupied column indices: the lowest ``count`` by default, or the
    ``count`` largest projections onto a reference occupied set."""
    if reference is None:
        return np.arange(count)
    scores = np.sum((reference @ vectors) ** 2, axis=0)
    picked = np.sort(np.argsort(-scores, kind="stable")[:count])
    return picked


def _collinear_iteration(params, holstein, densities, geometry, opts):
    h_up, h_down = build_hf_hamiltonian(params, holstein, densities, geometry)
    sys_up = eig_sym(h_up)
    sys_down = eig_sym(h_down)
    ref_up = ref_down = None
    if opts.fill_reference is not None:
        ref_up, ref_down = opts.fill_reference
    occ_up = _fill_indices(sys_up.vectors, opts.n_up, ref_up)
    occ_down = _fill_indices(sys_down.vectors, opts.n_down, ref_down)
    state = SlaterState(
        up_orbitals=sys_up.vectors[:, occ_up].T.copy(),
        down_orbitals=sys_down.vectors[:, occ_down].T.copy(),
        up_spectrum=sys_up.values,
        down_spectrum=sys_down.values,
        e_total=0.0,
        up_occupied=occ_up,
        down_occupied=occ_down,
    )
    return state, densities_from_state(state)


def _classify_spinors(vectors: np.ndarray, n_sites: int) -> np.ndarray:
    """Weight of each eigenvector on the spin-up block."""
    return np.sum(vectors[:n_sites, :] ** 2, axis=0)


def _noncollinear_iteration(params, holstein, densities, geometry, opts):
    n = geometry.n_sites
    if not (np.any(densities.sp) or np.any(densities.sm)):
        # exactly block-diagonal: solve the sectors separately so that
        # degenerate cross-sector pairs cannot mix in the eigensolver
        collinear = replace(params, mode="collinear")
        state, raw = _collinear_iteration(collinear, holstein, densities, geometry, opts)
        occ_up, occ_down = state.occupied_indices()
        orbitals = np.zeros((opts.n_up + opts.n_down, 2 * n))
        orbitals[: opts.n_up, :n] = state.up_orbitals
        orbitals[opts.n_up :, n:] = state.down_orbitals
        spectrum = np.sort(np.concatenate([state.up_spectrum, state.down_spectrum]))
        # map sector occupations into the merged ascending spectrum by value
        merged = NoncollinearState(
            orbitals=orbitals,
            spectrum=spectrum,
            occupied=_merged_indices(
                state.up_spectrum, occ_up, state.down_spectrum, occ_down
            ),
            e_total=0.0,
        )
        return merged, densities_from_state(merged)
    h = build_hf_hamiltonian(params, holstein, densities, geometry)
    system = eig_sym(h)
    up_weight = _classify_spinors(system.vectors, n)
    up_class = np.argsort(-up_weight, kind="stable")
    up_like = np.sort(up_class[:n])
    down_like = np.sort(up_class[n:])
    occ = np.sort(np.concatenate([up_like[: opts.n_up], down_like[: opts.n_down]]))
    state = NoncollinearState(
        orbitals=system.vectors[:, occ].T.copy(),
        spectrum=system.values,
        occupied=occ,
        e_total=0.0,
    )
    return state, densities_from_state(state)


def _merged_indices(up_spectrum, occ_up, down_spectrum, occ_down):
    """Positions of the chosen sector levels inside the merged ascending
    spectrum (ties resolved by sector order, matching np.argsort stability)."""
    tagged = [(e, 0, i) for i, e in enumerate(up_spectrum)] + [
        (e, 1, i) for i, e in enumerate(down_spectrum)
    ]
    order = sorted(range(len(tagged)), key=lambda j: (tagged[j][0], tagged[j][1]))
    position = {tagged[j][1:]: rank for rank, j in enumerate(order)}
    occ = [position[(0, int(i))] for i in occ_up] + [
        position[(1, int(i))] for i in occ_down
    ]
    return np.array(sorted(occ))


def scf_solve(
    params: ModelParams,
    displacement: DisplacementField,
    init: MeanFieldDensities | None = None,
    opts: ScfOptions = ScfOptions(),
):
    """Self-consistent ground state at a fixed distortion field.

    Iterates build -> fill -> densities with linear mixing; the mixing
    parameter halves (down to 0.05) when the energy oscillates while the
    residual stagnates.  Converged when the raw density change drops to
    ``opts.tol`` in max norm.

    Returns ``(state, densities, report)``; raises
    :class:`ScfConvergenceError` with the best residual when the budget
    is exhausted.
    """
    geometry = displacement.geometry
    if init is None:
        init = neel_densities(geometry, opts.n_up, opts.n_down)
    coords = holstein_coordinate(displacement)
    iterate = (
        _collinear_iteration if params.mode == "collinear" else _noncollinear_iteration
    )

    current = init.copy()
    alpha = opts.mixing
    cooldown = 0
    prev_residual = None
    best_residual = np.inf
    history: list[float] = []

    for iteration in range(1, opts.max_iter + 1):
        state, raw = iterate(params, coords, current, geometry, opts)
        residual = raw.residual(current)
        best_residual = min(best_residual, residual)
        energy = total_energy(state, current, params, displacement)
        history.append(energy)

        if residual <= opts.tol:
            state.e_total = total_energy(state, raw, params, displacement)
            report = ScfReport(
                iterations=iteration,
                residual=residual,
                converged=True,
                energy_history=history,
            )
            _attach_filling_warning(state, report, opts)
            return state, raw, report

        if opts.adaptive_mixing:
            oscillating = (
                len(history) >= 3
                and (history[-1] - history[-2]) * (history[-2] - history[-3]) < 0.0
            )
            if (
                cooldown == 0
                and prev_residual is not None
                and residual > prev_residual
                and oscillating
            ):
                alpha = max(0.5 * alpha, 0.05)
                cooldown = 5
            cooldown = max(0, cooldown - 1)
            prev_residual = residual
        current = current.mixed_with(raw, alpha)

    raise ScfConvergenceError(
        f"SCF did not converge in {opts.max_iter} iterations "
        f"(best residual {best_residual:.3e})",
        residual=best_residual,
        iterations=opts.max_iter,
    )


def _frontier(spectrum: np.ndarray, occupied: np.ndarray) -> tuple[float, float]:
    """(HOMO, LUMO) of one sector for an arbitrary occupied index set."""
    mask = np.zeros(spectrum.size, dtype=bool)
    mask[occupied] = True
    return float(np.max(spectrum[mask])), float(np.min(spectrum[~mask]))


def _attach_filling_warning(state, report: ScfReport, opts: ScfOptions):
    if isinstance(state, SlaterState):
        occ_up, occ_down = state.occupied_indices()
        homo_up, lumo_up = _frontier(state.up_spectrum, occ_up)
        homo_down, lumo_down = _frontier(state.down_spectrum, occ_down)
        smallest = min(lumo_up - homo_up, lumo_down - homo_down)
    else:
        homo, lumo = _frontier(state.spectrum, state.occupied)
        smallest = lumo - homo
    if smallest < GAP_FLOOR:
        report.warnings.append(
            f"ambiguous-filling: Fermi-level gap {smallest:.3e} below {GAP_FLOOR}; "
            "occupation resolved by eigensolver order"
        )


def frontier_levels(state: SlaterState, sector: str = "global") -> tuple[float, float]:
    """(HOMO, LUMO) pair for the requested sector."""
    occ_up, occ_down = state.occupied_indices()
    homo_up, lumo_up = _frontier(state.up_spectrum, occ_up)
    homo_down, lumo_down = _frontier(state.down_spectrum, occ_down)
    if sector == "up":
        return homo_up, lumo_up
    if sector == "down":
        return homo_down, lumo_down
    if sector == "global":
        return max(homo_up, homo_down), min(lumo_up, lumo_down)
    raise ValueError(f"sector must be up, down or global, got {sector!r}")


def homo_lumo_gap(state: SlaterState, sector: str = "global") -> float:
    """Gap between the lowest unoccupied and highest occupied level.

    ``sector`` is ``"up"``, ``"down"`` or ``"global"``; the global gap
    takes the frontier levels across both sectors (it can go negative
    when the fixed per-sector filling is not the global minimum).
    """
    occ_up, occ_down = state.occupied_indices()
    homo_up, lumo_up = _frontier(state.up_spectrum, occ_up)
    homo_down, lumo_down = _frontier(state.down_spectrum, occ_down)
    if sector == "up":
        return lumo_up - homo_up
    if sector == "down":
        return lumo_down - homo_down
    if sector == "global":
        return min(lumo_up, lumo_down) - max(homo_up, homo_down)
    raise ValueError(f"sector must be up, down or global, got {sector!r}")


def translate_state(
    state: SlaterState, geometry: LatticeGeometry, shift: tuple[int, int]
) -> SlaterState:
    """Determinant translated by a lattice vector (an exact symmetry of
    the model when the distortion field is translated the same way)."""
    perm = geometry.shift_map(*shift)
    up = np.empty_like(state.up_orbitals)
    down = np.empty_like(state.down_orbitals)
    up[:, perm] = state.up_orbitals
    down[:, perm] = state.down_orbitals
    occ_up, occ_down = state.occupied_indices()
    return SlaterState(
        up_orbitals=up,
        down_orbitals=down,
        up_spectrum=state.up_spectrum.copy(),
        down_spectrum=state.down_spectrum.copy(),
        e_total=state.e_total,
        up_occupied=occ_up.copy(),
        down_occupied=occ_down.copy(),
    )
