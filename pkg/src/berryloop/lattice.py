"""Periodic square-lattice geometry, breathing-mode displacement fields,
local distortion coordinates, and loop construction in distortion space.

Sites are indexed row-major from (0, 0): ``index = ix + Lx * iy``.  A
displacement field stores the in-plane oxygen displacements ``dx[i]``
(the oxygen on the bond from site i in +x) and ``dy[i]`` (+y bond).  The
local distortion coordinate of site i is

    R[i] = dx[i] - dx[i - x] + dy[i] - dy[i - y]

with periodic wrapping, which telescopes to sum(R) == 0 on any periodic
lattice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LatticeGeometry",
    "DisplacementField",
    "PathSpec",
    "breathing_displacement",
    "holstein_coordinate",
    "elastic_energy",
    "interpolate_segment",
    "path_catalog",
    "BUILTIN_PATHS",
]


@dataclass(frozen=True)
class LatticeGeometry:
    """Lx x Ly periodic square lattice with row-major site indexing."""

    lx: int = 4
    ly: int = 4

    def __post_init__(self):
        if self.lx < 2 or self.ly < 2:
            raise ValueError(f"lattice must be at least 2x2, got {self.lx}x{self.ly}")

    @property
    def n_sites(self) -> int:
        return self.lx * self.ly

    def site_index(self, ix: int, iy: int) -> int:
        return (ix % self.lx) + self.lx * (iy % self.ly)

    def site_coords(self, index: int) -> tuple[int, int]:
        return index % self.lx, index // self.lx

    def shift_map(self, dx: int, dy: int) -> np.ndarray:
        """Index permutation of the translation by (dx, dy):
        ``perm[i]`` is the site reached from i."""
        perm = np.empty(self.n_sites, dtype=int)
        for i in range(self.n_sites):
            ix, iy = self.site_coords(i)
            perm[i] = self.site_index(ix + dx, iy + dy)
        return perm

    def neighbor_bonds(self) -> list[tuple[int, int]]:
        """Each nearest-neighbor bond once, as (site, site+x) and (site, site+y)."""
        bonds = []
        for i in range(self.n_sites):
            ix, iy = self.site_coords(i)
            bonds.append((i, self.site_index(ix + 1, iy)))
            bonds.append((i, self.site_index(ix, iy + 1)))
        return bonds

    def staggered_signs(self) -> np.ndarray:
        """(-1)**(ix+iy) per site."""
        return np.array(
            [(-1.0) ** sum(self.site_coords(i)) for i in range(self.n_sites)]
        )


@dataclass(frozen=True)
class DisplacementField:
    """Oxygen displacements on the x- and y-bonds of every site."""

    geometry: LatticeGeometry
    dx: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        n = self.geometry.n_sites
        if self.dx.shape != (n,) or self.dy.shape != (n,):
            raise ValueError(
                f"displacement arrays must have shape ({n},), "
                f"got {self.dx.shape} and {self.dy.shape}"
            )
        if not (np.all(np.isfinite(self.dx)) and np.all(np.isfinite(self.dy))):
            raise ValueError("displacements must be finite")

    @classmethod
    def zero(cls, geometry: LatticeGeometry) -> "DisplacementField":
        n = geometry.n_sites
        return cls(geometry, np.zeros(n), np.zeros(n))

    def translated(self, dx: int, dy: int) -> "DisplacementField":
        """Field translated by the lattice vector (dx, dy)."""
        perm = self.geometry.shift_map(dx, dy)
        out_x = np.empty_like(self.dx)
        out_y = np.empty_like(self.dy)
        out_x[perm] = self.dx
        out_y[perm] = self.dy
        return DisplacementField(self.geometry, out_x, out_y)


def breathing_displacement(
    geometry: LatticeGeometry, center: int, amplitude: float
) -> DisplacementField:
    """Breathing distortion: the four oxygens around ``center`` move toward
    it by ``amplitude`` (positive amplitude binds the hole at the center)."""
    n = geometry.n_sites
    if not 0 <= center < n:
        raise ValueError(f"site index {center} out of range for {n} sites")
    dx = np.zeros(n)
    dy = np.zeros(n)
    ix, iy = geometry.site_coords(center)
    dx[center] = -amplitude
    dx[geometry.site_index(ix - 1, iy)] = +amplitude
    dy[center] = -amplitude
    dy[geometry.site_index(ix, iy - 1)] = +amplitude
    return DisplacementField(geometry, dx, dy)


def holstein_coordinate(field: DisplacementField) -> np.ndarray:
    """Local distortion coordinate R[i] = dx[i] - dx[left] + dy[i] - dy[below],
    with periodic wrapping."""
    g = field.geometry
    left = g.shift_map(-1, 0)
    below = g.shift_map(0, -1)
    return field.dx - field.dx[left] + field.dy - field.dy[below]


def elastic_energy(field: DisplacementField, spring_constant: float) -> float:
    """(K/2) * sum_i (dx_i**2 + dy_i**2)."""
    if spring_constant < 0.0:
        raise ValueError(f"spring constant must be >= 0, got {spring_constant}")
    return 0.5 * spring_constant * float(np.sum(field.dx**2) + np.sum(field.dy**2))


def interpolate_segment(
    field_a: DisplacementField, field_b: DisplacementField, tau: float
) -> DisplacementField:
    """Componentwise (1 - tau)*field_a + tau*field_b for tau in [0, 1]."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    if field_a.geometry != field_b.geometry:
        raise ValueError("fields live on different lattices")
    return DisplacementField(
        field_a.geometry,
        (1.0 - tau) * field_a.dx + tau * field_b.dx,
        (1.0 - tau) * field_a.dy + tau * field_b.dy,
    )


@dataclass(frozen=True)
class PathSpec:
    """Closed loop of lattice sites; the final segment returns to the first site.

    ``sites`` lists each vertex once (no repeated closing vertex) and
    ``steps_per_segment`` sets the sampling resolution.  Odd step counts
    keep the exactly symmetric midpoint configurations off the overlap
    grid, where the ground state is ill-defined.
    """

    geometry: LatticeGeometry
    sites: tuple[int, ...]
    steps_per_segment: int = 33
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        n = self.geometry.n_sites
        if len(self.sites) < 3:
            raise ValueError(
                f"a closed loop needs at least 3 vertices, got {len(self.sites)}"
            )
        for s in self.sites:
            if not 0 <= s < n:
                raise ValueError(f"site index {s} out of range for {n} sites")
        for a, b in zip(self.sites, self.sites[1:] + self.sites[:1]):
            if a == b:
                raise ValueError("consecutive path vertices must differ")
        if self.steps_per_segment < 1:
            raise ValueError(
                f"steps_per_segment must be positive, got {self.steps_per_segment}"
            )

    @property
    def n_segments(self) -> int:
        return len(self.sites)

    @classmethod
    def from_coords(
        cls,
        geometry: LatticeGeometry,
        coords,
        steps_per_segment: int = 33,
        name: str = "custom",
    ) -> "PathSpec":
        """Build from a list of [ix, iy] pairs (the config-file form)."""
        sites = tuple(geometry.site_index(int(ix), int(iy)) for ix, iy in coords)
        return cls(geometry, sites, steps_per_segment, name)


BUILTIN_PATHS = {
    "triangle": ((0, 0), (1, 0), (1, 1)),
    "square": ((0, 0), (1, 0), (1, 1), (0, 1)),
}


def path_catalog(
    name: str,
    geometry: LatticeGeometry | None = None,
    steps_per_segment: int = 33,
) -> PathSpec:
    """Look up a built-in closed path by name.

    Raises
    ------
    KeyError
        For unknown names; ``BUILTIN_PATHS`` lists the valid ones.
    """
    if name not in BUILTIN_PATHS:
        raise KeyError(
            f"unknown path {name!r}; built-in paths: {sorted(BUILTIN_PATHS)}"
        )
    geometry = geometry or LatticeGeometry()
    return PathSpec.from_coords(
        geometry, BUILTIN_PATHS[name], steps_per_segment, name=name
    )
