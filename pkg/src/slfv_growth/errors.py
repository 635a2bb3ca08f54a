"""Error types shared across simulators, mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid experiment configuration (exit code 1)."""


class BudgetExceeded(RuntimeError):
    """A replica exceeded its jump budget (exit code 2)."""


class InvariantViolation(RuntimeError):
    """A runtime contract of the simulation was broken (exit code 3)."""
