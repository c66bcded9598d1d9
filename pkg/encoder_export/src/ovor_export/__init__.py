"""Export tool materializing encoder tensors for the ovor file-cache backend."""

from ovor_export.errors import ExportError, ModelUnavailableError

__version__ = "0.1.0"

__all__ = ["ExportError", "ModelUnavailableError", "__version__"]
