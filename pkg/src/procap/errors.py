"""Exception hierarchy shared by every stage of the pipeline."""


class ProCapError(Exception):
    """Base class for pipeline errors."""

    kind = "error"


class DatasetError(ProCapError):
    kind = "dataset"


class ImageError(ProCapError):
    kind = "image"


class UndecodableImageError(ImageError):
    kind = "undecodable_image"


class RegionOutOfBoundsError(ImageError):
    kind = "region_out_of_bounds"


class OCRUnavailableError(ProCapError):
    kind = "ocr_unavailable"


class BackendError(ProCapError):
    """A VQA backend failed to answer. Carries the meme id and focus when known."""

    kind = "backend"

    def __init__(self, message, meme_id=None, focus=None):
        self.meme_id = meme_id
        self.focus = focus
        if meme_id is not None or focus is not None:
            message = f"{message} (meme={meme_id}, focus={focus})"
        super().__init__(message)


class BackendTimeoutError(BackendError):
    kind = "backend_timeout"


class BackendProtocolError(BackendError):
    kind = "backend_protocol"


class MissingCaptionError(ProCapError):
    kind = "missing_caption"


class EnvelopeError(ProCapError):
    kind = "envelope"


class SequenceOverflowError(ProCapError):
    kind = "sequence_overflow"


class DimensionMismatchError(ProCapError):
    kind = "dimension_mismatch"


class LabelWordError(ProCapError):
    kind = "label_word"


class UndefinedAUCError(ProCapError):
    kind = "undefined_auc"


class NonFiniteLossError(ProCapError):
    kind = "non_finite_loss"


class ConfigError(ProCapError):
    kind = "config"


class PartialFailureError(ProCapError):
    """A batch command finished but some items failed."""

    kind = "partial_failure"
