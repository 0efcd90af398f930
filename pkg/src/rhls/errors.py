"""Exception hierarchy shared by every module of the package."""


class RHLSError(Exception):
    """Base class for all errors raised by :mod:`rhls`."""


class OutOfRange(RHLSError, ValueError):
    """An exponent triple lies off the admissible conformal manifold."""


class DegenerateExponent(RHLSError, ValueError):
    pass


class SingularPoint(RHLSError, ValueError):
    """A Kelvin transform was requested at its own center."""


class PoleImage(RHLSError, ValueError):
    pass


class NoConvergence(RHLSError, ArithmeticError):
    """A quadrature failed to reach its tolerance."""


class EnvelopeMissing(RHLSError, ValueError):
    pass


class NotMonotone(RHLSError, ValueError):
    pass


class NegativeValue(RHLSError, ValueError):
    pass


class SignViolation(RHLSError, ValueError):
    pass


class ZeroFunction(RHLSError, ValueError):
    pass


class NonPositiveField(RHLSError, ValueError):
    pass


class RootBracketFailure(RHLSError, ArithmeticError):
    pass


class MomentDiverges(RHLSError, ValueError):
    pass


class Stalled(RHLSError, RuntimeError):
    """The variational iteration made no progress."""
