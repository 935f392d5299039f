"""Exception hierarchy.

Domain errors (bad math inputs, violated stationarity conditions, bounds
requested outside their validity region) map to CLI exit code 1;
configuration and I/O problems map to exit code 2.
"""


class LiptailError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(LiptailError, ValueError):
    """A mathematically invalid request (bad constants, violated condition)."""


class ProfileError(DomainError):
    """Invalid contraction profile (negative weights, sum not < 1, bad tail)."""


class CertificateError(DomainError):
    """The family-specific stationarity condition fails.

    Carries the offending sum so callers can report how far the model is
    from the contractive region.
    """

    def __init__(self, message, computed_sum=None):
        super().__init__(message)
        self.computed_sum = computed_sum


class SpecError(DomainError):
    """Malformed process specification (wrong parameters for the family)."""


class UnsupportedFamilyError(DomainError):
    """The requested operation needs the innovation-only domination property
    which this family does not have."""


class InapplicableBoundError(DomainError):
    """Bound kind cannot be applied to this process family / constants."""


class OutOfDomainError(DomainError):
    """Bound evaluated outside its stated validity region."""


class UnboundedLawError(DomainError):
    """An essential-supremum constant was requested for an unbounded law."""


class PathCountError(DomainError):
    """Exact enumeration would exceed the path-count budget."""


class ConfigError(LiptailError):
    """Invalid configuration file or CLI arguments (exit code 2)."""
