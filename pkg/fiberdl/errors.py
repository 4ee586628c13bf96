"""
Exception types raised across fiberdl
"""


class FiberDLError(Exception):

    """Base class for every error raised by fiberdl"""


class ConfigError(FiberDLError):

    """Experiment configuration is malformed or violates an invariant"""


class NumericalError(FiberDLError):

    """A computation produced non-finite values or failed to converge"""

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class TrainingDiverged(NumericalError):
    pass


class FactorizationError(NumericalError):
    pass


class SpectralOverflow(FiberDLError, ValueError):

    """A WDM channel does not fit inside the simulation bandwidth"""

    def __init__(self, message, channel):
        super().__init__(message)
        self.channel = channel


class FilterTooLong(FiberDLError, ValueError):
    pass


class DecimationError(FiberDLError, ValueError):
    pass
