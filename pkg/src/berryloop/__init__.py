"""Berry phase factors for real Hamiltonian families via discretized overlap products.

The package spans two regimes sharing one overlap-product engine:

* an analytic two-level model (planar field, gauge transformation,
  monopole validation case), and
* a mean-field Holstein-Hubbard model of a single hole coupled to
  breathing-mode lattice distortions on a periodic square lattice,
  where the sign of the Berry phase factor depends on the correlation
  strength and on the shape of the distortion loop.
"""

__version__ = "0.1.0"

from .exceptions import (
    DegeneracyError,
    PathSampleError,
    ResolutionError,
    ScfConvergenceError,
)

__all__ = [
    "DegeneracyError",
    "PathSampleError",
    "ResolutionError",
    "ScfConvergenceError",
    "__version__",
]
