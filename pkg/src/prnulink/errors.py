"""Exception types shared across the toolkit."""


class PrnulinkError(Exception):
    """Base class for all toolkit errors."""


class MalformedStream(PrnulinkError):
    """Encoded image bytes are truncated or corrupt."""


class UnsupportedFormat(PrnulinkError):
    """Byte stream is not a JPEG or PNG image."""


class DimensionMismatch(PrnulinkError):
    """Operands have incompatible pixel dimensions."""


class ImageTooSmall(PrnulinkError):
    """Image is smaller than the transform requires."""


class CapacityExceeded(PrnulinkError):
    """Payload does not fit in the cover image."""


class EmptyCorpus(PrnulinkError):
    """An operation received an empty image corpus."""


class EmptyList(PrnulinkError):
    """An operation received an empty input list."""


class DegenerateInput(PrnulinkError):
    """A constant plane has zero norm and cannot be correlated."""


class UntrainedModel(PrnulinkError):
    """Classifier is configured for a model that has no weights."""


class SingleClass(PrnulinkError):
    """Training data contains only one class label."""


class NonConvergence(PrnulinkError):
    """Iterative fit failed to converge within the iteration cap."""


class InsufficientImages(PrnulinkError):
    """Not enough images per camera for the requested split."""


class CorruptFile(PrnulinkError):
    """Persisted file has a bad magic, length, or layout."""


class VersionMismatch(PrnulinkError):
    """Persisted file uses an unsupported format version."""


class ZeroOriginal(PrnulinkError):
    """Compression ratio is undefined for a zero-byte original."""
