"""Exception types shared across the simulator."""


class ParameterError(ValueError):
    """A parameter violates an operation's preconditions."""


class EmptySequenceError(ParameterError):
    """A frame sequence is too short to process."""


class UnsupportedAspectError(ParameterError):
    """Frame aspect ratio cannot be center-cropped to a square."""


class CorruptStreamError(ValueError):
    """An event stream or file failed validation on decode."""


class ConfigError(ValueError):
    """A config file failed to parse.  Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class InternalInvariantError(AssertionError):
    """An invariant that should hold by construction was violated."""
