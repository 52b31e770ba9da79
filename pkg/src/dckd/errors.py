"""Exception hierarchy shared by every dckd module."""


class DCKDError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(DCKDError, ValueError):
    pass


class InvalidInput(DCKDError, ValueError):
    pass


class ShapeError(DCKDError, ValueError):
    pass


class StateError(DCKDError, RuntimeError):
    pass


class CheckFailed(DCKDError, RuntimeError):
    pass


class FormatError(DCKDError, ValueError):
    pass


class ConfigError(DCKDError, ValueError):
    pass


class DependencyError(DCKDError, RuntimeError):
    pass
