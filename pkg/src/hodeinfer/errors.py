"""Exception types raised across the package."""


class HodeError(Exception):
    """Base class for all package errors."""


class DivergedTrajectoryError(HodeError):
    """The Runge-Kutta recursion produced a non-finite value.

    ``stage`` is 1-4 for the stage evaluations of the right-hand side and 5
    for the state update itself.
    """

    def __init__(self, step, stage):
        self.step = step
        self.stage = stage
        super().__init__(f"non-finite value at grid step {step}, stage {stage}")


class OutOfBoxError(HodeError, ValueError):
    """A parameter vector lies outside the compact parameter box."""


class DomainError(HodeError, ValueError):
    """A time or covariate lies outside [0, 1]."""


class UnsupportedDerivativeError(HodeError, ValueError):
    """A spline derivative of too high an order was requested."""


class SingularDesignError(HodeError):
    pass


class RankDeficiencyError(HodeError):
    pass


class OptimizationError(HodeError):
    """Every start of a multistart optimisation failed."""


class StudyError(HodeError):
    """Too many replications or draws failed for the result to be usable."""
