"""Exception and warning types shared across the pipeline."""


class PolelocError(Exception):
    """Base class for all poleloc errors."""


class UnsupportedFormatError(PolelocError):
    """Image file is in a format the loader does not handle."""


class CorruptDataError(PolelocError):
    """File exists but its contents cannot be decoded."""


class ImageTooSmallError(PolelocError, ValueError):
    """Image is below the minimum size an operation requires."""


class OutOfBoundsError(PolelocError, ValueError):
    """A pixel coordinate violates an operation's border margin."""


class EmptyCornerSetError(PolelocError, ValueError):
    """An operation requiring at least one corner received none."""


class DegenerateRoiError(PolelocError, ValueError):
    """Clamping collapsed the crop rectangle to zero width or height."""


class TargetOutOfBoundsError(PolelocError, ValueError):
    """Gaussian target lies outside the crop it should be rendered into."""


class DimMismatchError(PolelocError, ValueError):
    """Two heatmaps that must share dimensions do not."""


class EmptyHeatmapError(PolelocError, ValueError):
    """Heatmap has no cells to decode."""


class MissingHeatmapFileError(PolelocError):
    """Sidecar heatmap file for an image is absent."""


class ChannelCountMismatchError(PolelocError, ValueError):
    """Heatmap file carries a different channel count than configured."""


class BinMismatchError(PolelocError, ValueError):
    """Histogram features being compared have different bin counts."""


class NoPolesError(PolelocError, ValueError):
    """Reference feature requested over an empty set of pole positions."""


class EmptyResultsError(PolelocError, ValueError):
    """Metric computation over an empty result collection."""


class ThetaMismatchError(PolelocError, ValueError):
    """Reports being compared were evaluated at different thresholds."""


class SpecInfeasibleError(PolelocError, ValueError):
    """Synthetic sample spec cannot be satisfied (poles do not fit)."""


class IdMismatchError(PolelocError, ValueError):
    """Results and annotations disagree on sample identifiers."""


class ConfigError(PolelocError, ValueError):
    """Pipeline configuration file is invalid."""


class DegenerateProfileWarning(UserWarning):
    """Row profile has zero dynamic range; full-height bounds returned."""
