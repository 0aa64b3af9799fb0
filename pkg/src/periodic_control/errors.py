"""Exception types shared across the package."""


class PeriodicControlError(Exception):
    """Base class for all library-specific errors."""


class SignalDomainError(PeriodicControlError, ValueError):
    """A control signal does not cover the requested time window."""


class ToleranceConflictError(PeriodicControlError, ValueError):
    """Eigenvalue grouping and unit-circle classification disagree.

    Raised when multipliers that share a modulus group (within the grouping
    tolerance) fall on different sides of the unit circle under the center
    tolerance, so no consistent stable/center/unstable split exists.
    """


class HypothesisViolatedError(PeriodicControlError, RuntimeError):
    """A hypothesis required by the requested analysis does not hold."""


class NumericalConditioningError(PeriodicControlError, RuntimeError):
    """An iteration failed to converge or a matrix is too ill-conditioned."""


class MissingCertificateError(PeriodicControlError, TypeError):
    """An operation that requires trajectory certificates received bare data."""


class ConfigError(PeriodicControlError, ValueError):
    """Invalid or unparseable scenario configuration."""
