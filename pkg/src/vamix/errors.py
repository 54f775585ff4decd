"""Exception types shared across the engine."""


class VamixError(Exception):
    """Base class for all engine errors."""


class MalformedFile(VamixError):
    """File does not parse as the expected container format."""


class UnsupportedFormat(VamixError):
    """File parses but uses a codec or layout the engine does not handle."""


class VersionUnsupported(MalformedFile):
    """Mask-set file declares a format version this build cannot read."""


class IoError(VamixError):
    """Underlying read or write failed."""


class InvalidClip(VamixError):
    """Audio buffer violates its invariants (NaN/Inf samples)."""


class SampleRateMismatch(VamixError):
    """Clip sample rate differs from what the operation is configured for."""


class EmptyClip(VamixError):
    """Clip has no samples, or too few for the requested analysis."""


class DegenerateWindowSum(VamixError):
    """Overlap-add normalization denominator vanished inside the valid region."""


class DimensionMismatch(VamixError):
    """Matrix shapes disagree (masks vs spectrogram, stems vs stems, ...)."""


class InvalidAlpha(VamixError):
    """Smoothing pole coefficient outside [0, 1)."""


class InvalidParams(VamixError):
    """Operation parameters outside their valid domain."""


class GainOutOfRange(VamixError):
    """Remix gain outside the configured [s_min, s_max] interval."""


class LengthMismatch(VamixError):
    """Signals that must be equal length are not."""


class SilentReference(VamixError):
    """Reference signal carries no energy; the metric is undefined."""


class DegenerateDenominator(VamixError):
    """Ratio metric denominator has no energy."""


class TooShort(VamixError):
    """Input clip shorter than the requested segment."""


class EmptyGrid(VamixError):
    """Parameter grid for a search is empty."""
