class DomainError(ValueError):
    """Argument outside an operation's domain (bad index, shape, or tour)."""


class ConfigurationError(ValueError):
    """Invalid or infeasible configuration value."""


class TrainingError(RuntimeError):
    """Training diverged (NaN loss or gradient)."""


class ParseError(ValueError):
    """Malformed TSPLIB or interchange file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CheckpointError(OSError):
    """Corrupt or incompatible checkpoint file."""
