"""Exception types raised across the comparison pipeline."""


class DocDiffError(Exception):
    """Base class for all errors raised by docdiff."""


class UnsupportedFormat(DocDiffError):
    pass


class CorruptImage(DocDiffError):
    pass


class BlankImage(DocDiffError):
    """The image has no foreground pixels after binarization."""


class BoxOutOfBounds(DocDiffError):
    pass


class BothBlank(DocDiffError):
    """Both word rasters carry zero ink, so the pixel coefficient is undefined."""


class EngineNotFound(DocDiffError):
    pass


class EngineFailed(DocDiffError):
    def __init__(self, message, returncode=None, stderr=""):
        super().__init__(message)
        self.returncode = returncode
        self.stderr = stderr


class OcrTimeout(DocDiffError):
    pass


class MalformedHocr(DocDiffError):
    pass


class MissingBbox(MalformedHocr):
    pass


class StageError(DocDiffError):
    """Wraps an upstream failure with the name of the pipeline stage."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
