"""Exception hierarchy shared by all icad modules."""


class IcadError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(IcadError, ValueError):
    """Invalid parameter or configuration value."""


class InvalidPathError(IcadError, ValueError):
    pass


class UnreachableError(IcadError):
    pass


class NoPathError(IcadError):
    """No simple path exists between a pair within the hop cap."""


class NotConnectedError(IcadError):
    pass


class NumericalError(IcadError, ArithmeticError):
    pass


class ConvergenceError(IcadError):
    def __init__(self, message: str, gap: float):
        super().__init__(f"{message} (last iterate gap {gap:.3e})")
        self.gap = gap


class TopologyGenerationError(IcadError):
    pass


class TraceFormatError(IcadError):
    pass
