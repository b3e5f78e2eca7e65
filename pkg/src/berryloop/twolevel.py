"""Analytic two-level models and gauge machinery.

The planar field Hamiltonian ``[[R3, R1], [R1, -R3]]`` is the simplest
real family with a nontrivial loop sign: ground states are real and
double-valued, the discretized overlap product around a loop of winding
``k`` converges to ``(-1)**k``, and the gauge-transformed connection
integrates to ``-2*pi*n*k`` per winding.  The complex three-parameter
case (``monopole_phase``) validates the same overlap engine against the
analytic solid-angle result; it is the only complex-arithmetic code path
in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exceptions import DegeneracyError
from .numerics import eig_sym

__all__ = [
    "PlanarLoop",
    "GaugeFunction",
    "planar_hamiltonian",
    "planar_eigenstate",
    "loop_states",
    "overlap_ring",
    "loop_phase_factor",
    "gauge_phase",
    "berry_field_real",
    "monopole_phase",
]

GAP_FLOOR = 1e-9


@dataclass(frozen=True)
class PlanarLoop:
    """Closed loop theta(s) = start_angle + 2*pi*winding*s/samples, s = 0..samples,
    with the final point identified with the first."""

    winding: int
    radius: float = 1.0
    samples: int = 256
    start_angle: float = 0.0

    def __post_init__(self):
        if self.samples < 8:
            raise ValueError(f"samples must be >= 8, got {self.samples}")
        if self.radius <= 0.0:
            raise DegeneracyError(
                f"radius must be positive (R=0 is the degenerate point), got {self.radius}"
            )


@dataclass(frozen=True)
class GaugeFunction:
    """Linear gauge lambda_n(theta) = n*k*theta for half-integer n, integer k."""

    n: float
    k: int

    def __call__(self, theta: float) -> float:
        return self.n * self.k * theta


def planar_hamiltonian(theta: float, radius: float = 1.0) -> np.ndarray:
    """2x2 real field Hamiltonian [[R3, R1], [R1, -R3]] with
    R3 = radius*cos(theta), R1 = radius*sin(theta).  Eigenvalues +-radius."""
    if radius <= 0.0:
        raise DegeneracyError(
            f"radius must be positive (R=0 is the degenerate point), got {radius}"
        )
    r3 = radius * math.cos(theta)
    r1 = radius * math.sin(theta)
    return np.array([[r3, r1], [r1, -r3]])


def planar_eigenstate(theta: float) -> np.ndarray:
    """Field-aligned eigenstate (cos(theta/2), sin(theta/2)).

    Continuous branch, not reduced mod 2*pi: advancing theta by 2*pi
    negates the state (double-valuedness), by 4*pi restores it.
    """
    return np.array([math.cos(0.5 * theta), math.sin(0.5 * theta)])


def loop_states(loop: PlanarLoop) -> list[np.ndarray]:
    """Ground states of the planar family on the loop's overlap grid.

    Each of the ``samples`` intervals is traversed in two half-steps, so
    the grid holds ``2*samples`` states; the loop closure reuses the
    first state rather than re-solving at theta + 2*pi*winding.  The
    half-step refinement doubles the magnitude convergence rate of the
    overlap product without touching its sign.
    """
    n_pts = 2 * loop.samples
    states = []
    for s in range(n_pts):
        theta = loop.start_angle + 2.0 * math.pi * loop.winding * s / n_pts
        system = eig_sym(planar_hamiltonian(theta, loop.radius))
        if system.values[1] - system.values[0] < GAP_FLOOR:
            raise DegeneracyError(
                f"gap below {GAP_FLOOR} at loop sample {s} (theta={theta})"
            )
        states.append(system.vectors[:, 0])
    return states


def overlap_ring(states: Sequence[np.ndarray]) -> float:
    """Product of successive overlaps around a closed ring of states,
    including the closure factor <first|last>.

    Every state enters once as bra and once as ket, so the value is
    invariant (to the last bit) under negating any state.
    """
    product = 1.0
    for j in range(1, len(states)):
        product *= float(states[j] @ states[j - 1])
    product *= float(states[0] @ states[-1])
    return product


def loop_phase_factor(loop: PlanarLoop) -> float:
    """Discretized Berry phase factor of the planar ground state.

    Returns a real number: its sign is the phase factor and its
    magnitude approaches 1 as ``samples`` grows (cos(pi*k/2N)**2N).
    """
    return overlap_ring(loop_states(loop))


def gauge_phase(gauge: GaugeFunction, loop: PlanarLoop) -> float:
    """Berry phase from the gauge function: -(lambda_n(theta_end) - lambda_n(theta_start)).

    For the loop parameterization this is exactly -2*pi*n*k*winding.
    """
    theta_start = loop.start_angle
    theta_end = loop.start_angle + 2.0 * math.pi * loop.winding
    return -(gauge(theta_end) - gauge(theta_start))


def transformed_connection(
    gauge: GaugeFunction, theta: float, step: float = 1e-6
) -> float:
    """Connection i<n'|d/dtheta|n'> of the gauge-transformed state
    exp(i*lambda_n(theta)) * planar_eigenstate(theta), by central differences.

    Equals -n*k up to O(step**2); integrating it around the loop
    reproduces :func:`gauge_phase`.
    """

    def state(t):
        return np.exp(1j * gauge(t)) * planar_eigenstate(t)

    derivative = (state(theta + step) - state(theta - step)) / (2.0 * step)
    return float((1j * np.vdot(state(theta), derivative)).real)


def berry_field_real(
    family: Callable[[np.ndarray], np.ndarray],
    point,
    level: int,
    step: float | None = None,
) -> np.ndarray:
    """Imaginary part of the curvature sum for a real symmetric family.

    Evaluates -Im sum_{m != n} <n|dH|m> x <m|dH|n> / (E_m - E_n)^2 with a
    central-difference gradient of the family at ``point`` (a 3-vector).
    For real families every matrix element is real, so the result
    vanishes identically; the function performs the assembly honestly in
    complex arithmetic and returns the imaginary 3-vector.

    Raises
    ------
    DegeneracyError
        If ``level`` is within ``GAP_FLOOR`` of a neighbouring level.
    """
    p = np.asarray(point, dtype=float)
    if p.shape != (3,):
        raise ValueError(f"point must be a 3-vector, got shape {p.shape}")
    h = step if step is not None else 1e-5 * max(1.0, float(np.linalg.norm(p)))

    system = eig_sym(family(p))
    values, vectors = system.values, system.vectors
    dim = values.size
    if not 0 <= level < dim:
        raise ValueError(f"level {level} out of range for dimension {dim}")
    gaps = np.abs(np.delete(values, level) - values[level])
    if gaps.size and gaps.min() < GAP_FLOOR:
        raise DegeneracyError(
            f"level {level} degenerate within {GAP_FLOOR} at the requested point"
        )

    grad = []
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = h
        grad.append((np.asarray(family(p + e), dtype=float)
                     - np.asarray(family(p - e), dtype=float)) / (2.0 * h))

    n_vec = vectors[:, level]
    field = np.zeros(3, dtype=complex)
    for m in range(dim):
        if m == level:
            continue
        m_vec = vectors[:, m]
        nm = np.array([n_vec @ g @ m_vec for g in grad], dtype=complex)
        mn = np.array([m_vec @ g @ n_vec for g in grad], dtype=complex)
        field -= np.cross(nm, mn) / (values[m] - values[level]) ** 2
    return field.imag


def monopole_phase(cone_angle: float, samples: int = 2048) -> float:
    """Berry phase of the lower level of the full 3-parameter field
    Hamiltonian around a constant-latitude loop at polar angle ``cone_angle``.

    The loop is traversed with decreasing azimuth, so the phase converges
    to -pi*(1 - cos(cone_angle)), i.e. minus half the enclosed solid
    angle; the boundary angles 0 and pi return their limits 0 and -2*pi.
    """
    if not 0.0 <= cone_angle <= math.pi:
        raise ValueError(f"cone angle must lie in [0, pi], got {cone_angle}")
    if cone_angle == 0.0:
        return 0.0
    if cone_angle == math.pi:
        return -2.0 * math.pi
    if samples < 8:
        raise ValueError(f"samples must be >= 8, got {samples}")

    r3 = math.cos(cone_angle)
    r_perp = math.sin(cone_angle)
    states = []
    for j in range(samples):
        phi = -2.0 * math.pi * j / samples
        h = np.array(
            [
                [r3, r_perp * math.cos(phi) - 1j * r_perp * math.sin(phi)],
                [r_perp * math.cos(phi) + 1j * r_perp * math.sin(phi), -r3],
            ]
        )
        _, vectors = np.linalg.eigh(h)
        states.append(vectors[:, 0])

    product = complex(1.0)
    for j in range(1, samples):
        product *= np.vdot(states[j], states[j - 1])
    product *= np.vdot(states[0], states[-1])

    phase = float(np.angle(product))
    # the enclosed-cap convention puts the phase in (-2*pi, 0]
    if phase > 1e-9:
        phase -= 2.0 * math.pi
    return phase
