"""Exception hierarchy. The CLI maps each family onto an exit code."""


class OpenMQBError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(OpenMQBError, ValueError):
    """Invalid input, reported with the offending field path."""

    exit_code = 4

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class InfeasibleError(OpenMQBError):
    """A requested mapping cannot be realised within hardware limits."""

    exit_code = 2

    def __init__(self, message, constraint=None):
        self.constraint = constraint
        super().__init__(message)


class PropagationError(OpenMQBError, RuntimeError):
    exit_code = 4


class TraceDriftError(PropagationError):
    pass


class PositivityError(PropagationError):
    pass


class TruncationError(PropagationError):
    pass


class CertificationError(OpenMQBError):
    exit_code = 3
