"""Exception types mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid configuration or schema violation (CLI exit code 2)."""

    def __init__(self, message, pointer=None):
        super().__init__(message)
        self.pointer = pointer or ""


class NumericsError(RuntimeError):
    """Numerical failure during execution (CLI exit code 3)."""
