"""Exception types shared across the package.

CLI exit-code mapping: validation / malformed input errors exit 2,
missing-data errors exit 3, numerical failures exit 4.
"""


class PatchfuseError(Exception):
    """Base class for all package-specific errors."""


class PpmError(PatchfuseError):
    """Malformed PPM data. `offset` is the byte position of the problem."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class CacheFormatError(PatchfuseError):
    """Malformed feature-cache file. `line` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ModelFormatError(PatchfuseError):
    """Malformed model file."""


class ManifestError(PatchfuseError):
    """Malformed dataset manifest. `line` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SplitError(PatchfuseError):
    """Dataset cannot be split as requested."""


class EmptySplitError(PatchfuseError):
    """A required split has no records at experiment time."""


class MissingFeaturesError(PatchfuseError):
    """Required feature vectors absent from a cache. Carries the ids."""

    def __init__(self, ids):
        ids = list(ids)
        preview = ", ".join(ids[:5]) + (", ..." if len(ids) > 5 else "")
        super().__init__(f"{len(ids)} feature vector(s) missing from cache: {preview}")
        self.ids = ids


class ExtractionError(PatchfuseError):
    """One or more backend extractions failed. Successful ids stay cached."""

    def __init__(self, failures):
        self.failures = dict(failures)
        first_id, first_err = next(iter(self.failures.items()))
        super().__init__(
            f"feature extraction failed for {len(self.failures)} id(s); "
            f"first: {first_id}: {first_err}"
        )


class TrainingDivergenceError(PatchfuseError):
    """Non-finite loss encountered during training."""

    def __init__(self, epoch, detail="non-finite loss"):
        super().__init__(f"training diverged at epoch {epoch}: {detail}")
        self.epoch = epoch
