"""Exception taxonomy shared by the whole engine."""


class EngineError(Exception):
    """Base class for all engine errors."""


class DimensionError(EngineError):
    """Shapes of two operands do not agree."""


class ConfigError(EngineError):
    """A configuration value is out of its legal range."""


class DataError(EngineError):
    """Dataset-level inconsistency (duplicate ids, bad labels, empty sets...)."""


class FormatError(EngineError):
    """A binary or text file does not match its declared format."""


class NumericError(EngineError):
    """Non-finite values where finite ones are required."""


class ContractError(EngineError):
    """An internal precondition was violated (e.g. backward from a non-scalar)."""


class DegenerateInputError(EngineError):
    """Input too small for the operation (e.g. conv on a too-short sequence)."""


class DegenerateBatchError(EngineError):
    """A batch whose features collapsed (zero self-HSIC), making CKA undefined.

    ``side`` names which argument collapsed ("x", "y" or "both").
    """

    def __init__(self, message, side):
        super().__init__(message)
        self.side = side


class MetricUndefinedError(EngineError):
    """Metric cannot be computed (e.g. EER on a single-class score set)."""
