"""Exception hierarchy shared by every module."""


class HNSpreadError(Exception):
    """Base class for all package errors."""


class DomainError(HNSpreadError, ValueError):
    """An argument lies outside the domain of the operation."""


class ValidationError(HNSpreadError, ValueError):
    """A configuration is inconsistent; raised before any numerical work."""


class DataError(HNSpreadError):
    """Input data is malformed or insufficient."""


class InsufficientDataError(DataError):
    pass


class NumericalError(HNSpreadError, ArithmeticError):
    """A numerical procedure failed to produce a trustworthy answer."""


class SingularRecursionError(NumericalError):
    """The affine MGF recursion hit 1 - 2*alpha*B <= 0 (outside the analyticity strip)."""


class InversionError(NumericalError):
    """Fourier inversion produced non-finite or too inaccurate values."""


class UnsupportedOperation(HNSpreadError, NotImplementedError):
    """The copula (or object) does not provide the requested operation."""


class DegenerateEstimateError(DomainError):
    """An estimator hit a degenerate configuration (infinite or zero estimate)."""
