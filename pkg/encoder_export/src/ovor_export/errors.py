class ExportError(Exception):
    """Base class for export tool failures."""


class ModelUnavailableError(ExportError):
    """A pretrained backend could not be loaded; message carries setup steps."""
