"""
Exception hierarchy shared by the simulator packages.

Library code raises these; the pipeline steps in ``flows`` catch them and turn
them into status dictionaries, and ``main.py`` maps them to exit codes.
"""


class PTSimError(Exception):
    """Base class for every error raised by the simulator."""


class NonFiniteInput(PTSimError, ValueError):
    """A NaN or Inf reached an operation that only admits finite values."""


class InvalidArgument(PTSimError, ValueError):
    """A documented precondition was violated."""


class DegenerateInput(PTSimError, ValueError):
    """A zero-norm state (or zero-purity matrix) where normalization is required."""


class DegenerateDenominator(PTSimError, ArithmeticError):
    """The dilation normalization vanishes; post-selection would never succeed."""


class PostselectionImpossible(PTSimError):
    """The ancilla-|0> component of a two-qubit state is numerically zero."""


class DecompositionFailed(PTSimError):
    """Numeric waveplate decomposition could not reach the target."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class ConfigError(PTSimError):
    """Run configuration could not be parsed or validated."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class MissingField(ConfigError):
    def __init__(self, field: str):
        super().__init__(field, "field required")


class InvalidValue(ConfigError):
    pass
