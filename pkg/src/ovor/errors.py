"""Exception hierarchy shared across the toolkit."""


class OvorError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(OvorError, ValueError):
    """A precondition on an operation's arguments was violated."""


class MissingKeyError(OvorError, KeyError):
    """A file-cache backend has no entry for the requested key."""

    def __str__(self):  # KeyError quotes its message otherwise
        return Exception.__str__(self)


class CorruptCacheError(OvorError):
    """A cached tensor does not match its declared shape or checksum."""


class BackendUnavailableError(OvorError):
    """An encoder backend could not be constructed or loaded."""


class DegenerateEmbeddingError(OvorError):
    """A vector that must be normalizable has (near-)zero norm."""


class IntegrityError(OvorError):
    """Cross-references inside an input file are inconsistent."""


class TrainingDivergedError(OvorError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, batch, message=None):
        self.epoch = epoch
        self.batch = batch
        super().__init__(
            message or f"non-finite loss at epoch {epoch}, batch {batch}"
        )


class FormatError(OvorError):
    """An interchange file has a bad magic, version, or schema."""
