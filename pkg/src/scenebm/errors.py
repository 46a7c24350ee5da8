"""Exception hierarchy shared by the library, service and CLI."""


class ScenebmError(Exception):
    """Base class for all package errors."""


class UsageError(ScenebmError):
    """The caller asked for something malformed (bad flags, empty grids)."""


class DataError(ScenebmError):
    """Input data is invalid: bad files, unknown names, shape mismatches."""


class VocabularyError(DataError):
    """A name or index does not exist in the vocabulary."""


class DatasetFormatError(DataError):
    """A dataset file does not follow the canonical JSON schema."""


class ModelFileError(DataError):
    """A model file is truncated, corrupt, or of an unknown version."""


class FingerprintMismatchError(DataError):
    """Model and dataset were built against different vocabularies."""


class BoundExceededError(ScenebmError):
    """Exact enumeration was requested for a model beyond the size cap."""


class TrainingDivergedError(ScenebmError):
    """Training produced a non-finite statistic."""

    def __init__(self, epoch: int, detail: str = ""):
        self.epoch = epoch
        super().__init__(f"training diverged at epoch {epoch}: {detail}")
