"""Exception types raised across the package."""


class MascopeError(Exception):
    """Base class for all package errors."""


class DimensionError(MascopeError, ValueError):
    pass


class SingularMatrixError(MascopeError, ArithmeticError):
    pass


class InfeasibleError(MascopeError, ValueError):
    """An intersection of constraint sets is empty."""


class DegenerateSetError(MascopeError, ValueError):
    pass


class PreconditionError(MascopeError, ValueError):
    pass


class ParameterError(MascopeError, ValueError):
    pass


class ValidationError(MascopeError):
    """A checkable assumption (mixing, connectivity, feasibility) failed."""


class DiagnosticsError(MascopeError):
    pass


class UsageError(MascopeError):
    pass
