"""Error taxonomy for the extraction pipeline."""


class ExtractError(Exception):
    """Base class for all extraction failures."""


class SpecError(ExtractError):
    """Unknown model id or invalid extraction configuration."""


class ManifestError(ExtractError):
    """Malformed audio manifest."""


class AudioError(ExtractError):
    """A clip could not be decoded or resampled."""


class DimMismatchError(ExtractError):
    """The model emitted a vector of the wrong width (wrong checkpoint?)."""


class ModelUnavailableError(ExtractError):
    """The requested model cannot be loaded in this environment."""
