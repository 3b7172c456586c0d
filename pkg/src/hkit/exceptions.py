"""Exception hierarchy for hkit."""


class HkitError(Exception):
    """Base class for all errors raised by hkit."""


class InvalidExponentError(HkitError, ValueError):
    """An L^p exponent is not strictly greater than one, or exponents are not conjugate."""


class DimensionError(HkitError, ValueError):
    """Array lengths or grids do not match."""


class InvalidConfigError(HkitError, ValueError):
    """A configuration object violates its invariants."""


class BallMembershipError(HkitError, ValueError):
    """A point lies outside the ball required by a check."""


class EvaluationError(HkitError, ArithmeticError):
    """A pointwise nonlinearity produced a non-finite value.

    Attributes
    ----------
    index : int
        First grid node at which evaluation failed.
    """

    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


class NoRootError(HkitError, ArithmeticError):
    """Bracket expansion failed for a scalar monotone equation."""


class ResolventError(HkitError, ArithmeticError):
    """An inner resolvent solve did not converge."""


class ContractionFactorError(ResolventError, ValueError):
    """Extension requested outside the contraction range t > t0 / 2."""


class InvalidScheduleError(HkitError, ValueError):
    """A step-size schedule violates its invariants."""


class VariantMisuseError(HkitError, ValueError):
    """An iteration variant was used outside its validity range."""


class ProbeRejectedError(HkitError):
    """A monotonicity probe refuted a required monotonicity property."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DivergenceError(HkitError, ArithmeticError):
    """The coupled iteration produced non-finite values.

    Attributes
    ----------
    n : int
        Iteration index at which the failure was detected.
    trace : list
        Trace records collected before the failure.
    """

    def __init__(self, message, n, trace=None):
        super().__init__(message)
        self.n = n
        self.trace = list(trace or [])


class OracleFailureError(HkitError, ArithmeticError):
    """The reference Newton solver failed to converge."""
