"""Exception types shared across the package.

Plain input validation raises built-in ``ValueError``/``KeyError``; the
classes here mark failure modes a caller may want to branch on (and that
the command line maps to distinct exit codes).
"""


class DegeneracyError(ValueError):
    """A parameter point sits on (or too close to) a level degeneracy,
    so the requested adiabatic state is ill-defined."""


class ScfConvergenceError(RuntimeError):
    """Self-consistency loop exhausted its iteration budget.

    Attributes
    ----------
    residual : float
        Best (smallest) density residual reached before giving up.
    iterations : int
        Number of iterations performed.
    """

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class PathSampleError(RuntimeError):
    """SCF failed at a specific sample of a distortion path.

    Attributes
    ----------
    segment : int
        Index of the failing segment.
    tau : float
        Within-segment coordinate of the failing sample.
    """

    def __init__(self, message, segment, tau, cause=None):
        super().__init__(message)
        self.segment = segment
        self.tau = tau
        self.__cause__ = cause


class ResolutionError(RuntimeError):
    """Overlap product too poorly resolved to trust; rerun with more
    samples per segment.

    Attributes
    ----------
    step_resolution : float
        Geometric-mean per-step overlap magnitude that fell below the floor.
    n_s : int
        Steps per segment used by the failing run.
    """

    def __init__(self, message, step_resolution, n_s):
        super().__init__(message)
        self.step_resolution = step_resolution
        self.n_s = n_s
