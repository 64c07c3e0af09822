"""Exception types shared across the toolkit (and mapped to CLI exit codes)."""


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class ScheduleExhaustedError(RuntimeError):
    """A generation beyond the configured schedule was requested (exit 3)."""


class ResourceBudgetError(RuntimeError):
    """An enumeration exceeded its configured budget (exit 3)."""


class InvariantViolationError(AssertionError):
    """A structural invariant failed at runtime; indicates a bug (exit 4)."""


class EmptyBallError(ValueError):
    """A mass-normalized quantity was requested on a ball of zero mass."""
