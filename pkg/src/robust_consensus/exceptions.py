"""Exception types raised across the package."""


class ConsensusError(Exception):
    """Base class for all package errors."""


class ParameterError(ConsensusError, ValueError):
    """Invalid parameters for a graph family, map, noise model or config."""


class GraphGenerationError(ConsensusError, RuntimeError):
    """A random graph model failed to produce a connected instance."""


class NumericError(ConsensusError, ArithmeticError):
    """A computation produced a non-finite or otherwise unusable value."""


class CapabilityError(ConsensusError, NotImplementedError):
    """The requested quantity is not available for this model (e.g. no closed density)."""


class StabilityError(ConsensusError, ValueError):
    """The gain violates ``2 a g'(0) h'(theta0) lambda_2 > 1``."""

    def __init__(self, margin, message=None):
        self.margin = float(margin)
        if message is None:
            message = (
                f"stability condition violated: margin 2*a*g'(0)*h'(theta0)*lambda_2 - 1 = "
                f"{self.margin:.6g} <= 0"
            )
        super().__init__(message)


class ConfigError(ConsensusError, ValueError):
    """Malformed experiment configuration."""
