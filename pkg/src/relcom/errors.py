"""Exception types shared across the package."""


class RelcomError(Exception):
    """Base class for package errors."""


class ConfigurationError(RelcomError):
    """Invalid settings: bad parameter values, malformed config files."""


class ContractViolationError(RelcomError):
    """An internal precondition did not hold (caller bug, not user input)."""
