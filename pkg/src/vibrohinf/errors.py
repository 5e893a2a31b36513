"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: infeasibility-type errors exit 1,
numerical failures exit 2, configuration errors exit 3.
"""


class VibroHinfError(Exception):
    """Base class for every error raised by the package."""


class DimensionError(VibroHinfError, ValueError):
    pass


class AsymmetryError(VibroHinfError, ValueError):
    pass


class PreconditionError(VibroHinfError, ValueError):
    pass


class NumericalFailure(VibroHinfError, ArithmeticError):
    pass


class NoUniqueSolution(NumericalFailure):
    """Sylvester/Lyapunov operator is singular (spectra intersect)."""


class NonPeriodicAntiderivative(PreconditionError):
    pass


class TransformError(NumericalFailure):
    """Psi is too ill-conditioned at some grid node."""


class DivergenceError(NumericalFailure):
    pass


class NoReferenceError(NumericalFailure):
    """Shooting Newton iteration did not converge."""


class InconsistencyError(NumericalFailure):
    """Feasibility verdicts contradict monotonicity during bisection."""


class Infeasible(VibroHinfError):
    """No stabilizing positive definite Riccati solution exists."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class UnattainableError(Infeasible):
    """Bisection could not find a feasible level below gamma_max."""


class ConfigError(VibroHinfError, ValueError):
    pass


class InfeasiblePrecondition(Infeasible, PreconditionError):
    """An operation that needs a feasible averaged problem was given an infeasible one."""
