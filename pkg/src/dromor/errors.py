"""Exception hierarchy shared by all dromor modules."""


class DromorError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(DromorError, ValueError):
    """Matrix or vector dimensions are inconsistent."""


class NotSymmetricError(DromorError, ValueError):
    """A matrix required to be symmetric is not, beyond tolerance."""


class NotPsdError(DromorError, ValueError):
    """A matrix required to be positive semidefinite has a negative
    eigenvalue beyond tolerance."""


class InstabilityError(DromorError, ValueError):
    """An operation requiring a Schur-stable matrix (spectral radius < 1)
    received an unstable one."""


class UnobservableError(DromorError, ValueError):
    """The pair (A, C) is unobservable; pre-truncate the unobservable
    subspace before calling the canonical-form transform."""


class RankDeficiencyError(DromorError):
    """A factor that must have full rank is numerically rank deficient."""


class ConvergenceError(DromorError):
    """An iterative dense linear-algebra routine failed to converge."""


class SolverFailure(DromorError):
    """A conic solve did not finish with a usable solution.

    Attributes:
        report: the SolveReport of the failed solve, when available.
        stage: name of the pipeline stage that issued the solve.
    """

    def __init__(self, message, report=None, stage=None):
        super().__init__(message)
        self.report = report
        self.stage = stage


class InfeasibleError(SolverFailure):
    """The conic solver produced an infeasibility certificate."""
