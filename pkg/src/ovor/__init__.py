"""Open-vocabulary object recognition toolkit.

Localizes object regions from segmentation masks, embeds regions and
arbitrary category vocabularies into a shared 512-d space, optionally
projects the joint matrix through z-score + truncated SVD, and assigns
each region a category by cosine similarity + softmax + threshold.
"""

from ovor.errors import (
    CorruptCacheError,
    DegenerateEmbeddingError,
    IntegrityError,
    InvalidArgumentError,
    MissingKeyError,
    OvorError,
)

__version__ = "0.1.0"

__all__ = [
    "OvorError",
    "InvalidArgumentError",
    "MissingKeyError",
    "CorruptCacheError",
    "IntegrityError",
    "DegenerateEmbeddingError",
    "__version__",
]
