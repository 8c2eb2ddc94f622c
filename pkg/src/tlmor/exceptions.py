"""Exception types raised by tlmor."""


class TLMORError(Exception):
    """Base class for all package errors."""


class DimensionError(TLMORError, ValueError):
    """Matrices or data blocks have inconsistent shapes."""


class SolveFailure(TLMORError):
    """A Stein or Sylvester equation could not be solved reliably.

    Raised when the spectral-radius precondition fails, the vectorized
    linear system is singular, or the residual check does not pass.
    """


class RankDeficient(TLMORError):
    """The Hankel matrix has numerical rank below the requested order."""


class InfeasibleInit(TLMORError):
    """The initial ROM violates the stability constraint."""


class BacktrackExhausted(TLMORError):
    """The line search hit its backtrack cap without satisfying Armijo."""
