"""Exception types raised across the package."""


class RisRelayError(Exception):
    """Base class for all package errors."""


class ParameterDomainError(RisRelayError, ValueError):
    """A distribution or model parameter lies outside its valid domain."""


class UnsupportedDepthError(RisRelayError, ValueError):
    """Cascade depth beyond what the quadrature density supports."""


class GeometryError(RisRelayError, ValueError):
    pass


class FramingError(RisRelayError, ValueError):
    """Bit stream length does not fit the symbol framing."""


class ShapeMismatchError(RisRelayError, ValueError):
    pass


class StaleCacheError(RisRelayError, RuntimeError):
    """A backward pass was given a cache that does not belong to the network."""


class DivergenceError(RisRelayError, RuntimeError):
    def __init__(self, step: int, loss: float):
        super().__init__(f"training diverged at step {step} (loss={loss})")
        self.step = step
        self.loss = loss


class ModelFormatError(RisRelayError, ValueError):
    pass


class VersionMismatchError(ModelFormatError):
    pass


class ChecksumError(ModelFormatError):
    pass


class MissingModelError(RisRelayError, LookupError):
    pass


class ConfigError(RisRelayError, ValueError):
    pass


class UnreachableTargetError(RisRelayError, ValueError):
    """Requested BER level is not crossed by a curve."""
