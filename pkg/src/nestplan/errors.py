"""Exception types raised across the package."""


class NestplanError(Exception):
    """Base class for all package errors."""


class DegenerateInputError(NestplanError, ValueError):
    """An operation received an empty or zero-sized input."""


class ParticleDepletionError(NestplanError):
    """Every particle ended up with zero weight.

    This signals an observation that is inconsistent with every hypothesis
    currently held by the filter.
    """


class InconsistentObservationError(NestplanError):
    """An exact belief update produced zero posterior mass."""


class DomainError(NestplanError, ValueError):
    """A domain file or table failed to parse or validate."""

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"row {key}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class PriorError(NestplanError, ValueError):
    """A nested prior is malformed."""


class ConfigError(NestplanError, ValueError):
    """An experiment or domain configuration is invalid."""


class LevelMismatchError(NestplanError, ValueError):
    """Nested particle structure disagrees with the declared level."""


class BudgetExceededError(NestplanError):
    """A computation would exceed its configured resource budget."""
