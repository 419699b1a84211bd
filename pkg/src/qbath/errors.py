"""Exception types shared across the package."""


class QbathError(Exception):
    """Base class for package-specific errors."""


class ConfigError(QbathError, ValueError):
    """Raised for malformed or invalid run configurations."""


class IntegrationError(QbathError, RuntimeError):
    """Raised when the evolved state violates its invariants mid-run."""
