"""Exception hierarchy shared by all modules."""


class QamGameError(Exception):
    """Base class for every error raised by this package."""


class DomainError(QamGameError, ValueError):
    """An argument lies outside the domain of the function."""


class ConfigError(QamGameError):
    """Missing or malformed configuration (gain tables, scene files)."""


class SolverError(QamGameError):
    """A root finder or fit could not converge."""


class InfeasibleError(QamGameError):
    """A requested operating point cannot be reached."""


class InfeasibleTargetError(InfeasibleError):
    """Target packet-success probability is at or above 1 - 2**-L."""


class UnstableQueueError(InfeasibleError):
    """Arrival rate meets or exceeds the service rate."""


class DelayBoundError(InfeasibleError):
    """Delay bound is shorter than a single packet transmission."""


class QosInfeasibleError(InfeasibleError):
    """No constellation up to ``b_max`` can meet the (lambda, D) pair.

    ``residual`` holds the left-hand side of the feasibility inequality
    evaluated at ``b_max`` (feasible requires it to be below one).
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class FitError(SolverError):
    """Gain-model fit rejected its samples or failed."""
