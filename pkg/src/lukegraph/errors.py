"""Exception hierarchy shared across the package."""


class LukeGraphError(Exception):
    pass


class DimensionError(LukeGraphError, ValueError):
    pass


class DomainError(LukeGraphError, ValueError):
    pass


class UsageError(LukeGraphError, ValueError):
    pass


class ValidationError(LukeGraphError, ValueError):
    pass


class ParseError(LukeGraphError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(LukeGraphError, ValueError):
    pass


class GenerationError(LukeGraphError, RuntimeError):
    pass


class CheckpointError(LukeGraphError, ValueError):
    pass


class TrainingError(LukeGraphError, RuntimeError):
    pass


class BoundsError(LukeGraphError, IndexError):
    pass
