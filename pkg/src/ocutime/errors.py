"""Exception hierarchy shared across the toolkit."""


class OcutimeError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(OcutimeError):
    """Invalid or inconsistent configuration values."""


class ShapeError(OcutimeError):
    """Array shape does not match the operation's contract."""


class AlignmentError(OcutimeError):
    """EEG and trajectory streams disagree in length or sampling rate."""


class SegmentRangeError(OcutimeError):
    """Requested segment boundaries fall outside the recording."""


class EmptyInputError(OcutimeError):
    """Operation received an empty sequence or collection."""


class TooShortError(OcutimeError):
    """Signal is shorter than the minimum the operation supports."""


class DegenerateMontageError(OcutimeError):
    """Montage has too few channels for the requested referencing."""


class UndefinedCorrelationError(OcutimeError):
    """Correlation is undefined (constant input)."""


class InsufficientDataError(OcutimeError):
    """Not enough samples/groups to perform the computation."""


class OrderingError(OcutimeError):
    """Input violates a required chronological ordering."""


class InfeasiblePathError(OcutimeError):
    """Band constraint admits no valid warping path."""


class NumericError(OcutimeError):
    """Non-finite value produced during computation."""


class StageOrderError(OcutimeError):
    """A pipeline stage was invoked before its prerequisite stage."""


class StaleInputError(OcutimeError):
    """A pipeline stage input no longer matches its recorded digest."""
