"""Exception types raised across the package."""


class AoIError(ValueError):
    """Base class for all package errors."""


class InvalidRateError(AoIError):
    pass


class UnreachableEpsilonError(AoIError):
    """The requested failure probability cannot be produced by any finite power."""


class DivergentSeriesError(AoIError):
    """The xi-series does not converge (tail failure probability is one)."""


class DegenerateProfileError(DivergentSeriesError):
    """Every state fails surely, so the chain never returns to state 0."""


class InfeasibleTauError(AoIError):
    pass


class InvalidInitError(AoIError):
    """The annealer was started from a policy that violates the power budget."""


class NoCompleteCycleError(AoIError):
    pass


class InsufficientCyclesError(AoIError):
    pass
