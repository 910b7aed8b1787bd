"""Exception types raised across the package."""


class FplsrError(Exception):
    """Base class for package errors."""


class InputError(FplsrError, ValueError):
    """Malformed input: bad arguments, files, or configuration."""


class DomainError(InputError):
    """Evaluation point outside a basis domain."""


class NotPSDError(FplsrError, ValueError):
    """Matrix is not symmetric positive semidefinite."""


class SmoothingError(FplsrError, RuntimeError):
    """Penalized least squares failed for every smoothing parameter."""


class FitFailure(FplsrError, RuntimeError):
    """A regression fit could not produce an estimate."""
