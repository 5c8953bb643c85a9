"""Exception hierarchy for the delayecho package."""


class DelayEchoError(Exception):
    """Base class for all package-specific errors."""


class DomainError(DelayEchoError, ValueError):
    """A physical input is outside the domain where the formula is defined."""


class ValidationError(DelayEchoError, ValueError):
    """A schedule, bath, or configuration fails structural validation."""


class ConfigError(ValidationError):
    """A run configuration file violates the schema."""


class ToleranceError(DelayEchoError, RuntimeError):
    """A propagation exceeded its numerical-hygiene tolerances."""
