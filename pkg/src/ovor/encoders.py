"""Encoder backends producing embeddings and CNN feature maps.

Three backends share one duck-typed surface (encode_text, encode_image,
extract_features):

  * MockEncoder      -- deterministic pseudo-random vectors keyed by a
                        stable digest of the input; hermetic tests.
  * FileCacheEncoder -- read-only lookup of tensors exported by the
                        companion export tool (real CLIP / EfficientNet).
  * PlantedMockEncoder -- test fixture: each region returns its assigned
                        category's embedding plus optional noise.

All embedding outputs are unit-norm 512-d float64.
"""

from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path

import numpy as np

from ovor import ovt
from ovor.errors import CorruptCacheError, InvalidArgumentError, MissingKeyError

EMBED_DIM = 512
FEATURE_SHAPE = (7, 7, 1280)


def _digest_rng(seed: int, kind: str, payload: bytes) -> np.random.Generator:
    digest = hashlib.sha256(
        kind.encode() + b"\x00" + str(seed).encode() + b"\x00" + payload
    ).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def _patch_bytes(patch) -> bytes:
    arr = np.ascontiguousarray(np.asarray(patch, dtype=np.uint8))
    if arr.size == 0:
        raise InvalidArgumentError("patch must be non-empty")
    return arr.shape.__repr__().encode() + arr.tobytes()


class MockEncoder:
    """Deterministic stand-in for the real text/image encoders.

    Vectors are seeded Gaussian draws keyed by a digest of the input,
    normalized onto the unit sphere; same (seed, input) always gives the
    same vector, distinct inputs collide with negligible probability.
    """

    kind = "mock"

    def __init__(self, seed: int = 0, dim: int = EMBED_DIM):
        self.seed = seed
        self.dim = dim

    def encode_text(self, prompt: str) -> np.ndarray:
        if not prompt:
            raise InvalidArgumentError("prompt must be non-empty")
        rng = _digest_rng(self.seed, "text", prompt.encode())
        v = rng.standard_normal(self.dim)
        return v / np.linalg.norm(v)

    def encode_image(self, patch, key: str = None) -> np.ndarray:
        rng = _digest_rng(self.seed, "image", _patch_bytes(patch))
        v = rng.standard_normal(self.dim)
        return v / np.linalg.norm(v)

    def extract_features(self, patch, key: str = None) -> np.ndarray:
        rng = _digest_rng(self.seed, "features", _patch_bytes(patch))
        return rng.standard_normal(FEATURE_SHAPE)


class FileCacheEncoder:
    """Reads exported tensors from disk via a JSON manifest.

    Manifest maps string keys (prompt text, or "{image_id}:{region_id}")
    to {"path": ..., "shape": [...]}. Loaded tensors are memoized behind
    a lock so concurrent readers see each file loaded once.
    """

    kind = "file-cache"

    def __init__(self, manifest_path):
        self.manifest_path = Path(manifest_path)
        with open(self.manifest_path) as f:
            manifest = json.load(f)
        self.entries = manifest["entries"] if "entries" in manifest else manifest
        self._memo = {}
        self._lock = threading.Lock()

    def _load(self, key: str, expect_shape=None) -> np.ndarray:
        with self._lock:
            if key in self._memo:
                return self._memo[key]
        if key not in self.entries:
            raise MissingKeyError(f"no cached tensor for key {key!r}")
        entry = self.entries[key]
        path = self.manifest_path.parent / entry["path"]
        arr = ovt.read_ovt(path).astype(np.float64)
        declared = tuple(entry.get("shape", arr.shape))
        if arr.shape != declared:
            raise CorruptCacheError(
                f"{key!r}: manifest declares shape {declared}, file has {arr.shape}"
            )
        if expect_shape is not None and arr.shape != expect_shape:
            raise CorruptCacheError(
                f"{key!r}: expected shape {expect_shape}, found {arr.shape}"
            )
        with self._lock:
            self._memo[key] = arr
        return arr

    def encode_text(self, prompt: str) -> np.ndarray:
        if not prompt:
            raise InvalidArgumentError("prompt must be non-empty")
        return self._load(prompt, (EMBED_DIM,))

    def encode_image_key(self, key: str) -> np.ndarray:
        return self._load(key, (EMBED_DIM,))

    def encode_image(self, patch, key: str = None) -> np.ndarray:
        if key is None:
            raise MissingKeyError("file-cache image lookup requires a region key")
        return self._load(key, (EMBED_DIM,))

    def extract_features(self, patch, key: str = None) -> np.ndarray:
        if key is None:
            raise MissingKeyError("file-cache feature lookup requires a region key")
        return self._load(key, FEATURE_SHAPE)


class PlantedMockEncoder:
    """Mock whose image embeddings encode a known ground-truth assignment.

    encode_image(patch, key=region_key) returns
    normalize(category_embedding + noise * gaussian); with noise 0 the
    matcher recovers the assignment exactly.
    """

    kind = "planted-mock"

    def __init__(self, table, assignment: dict, noise: float = 0.0, seed: int = 0):
        if noise < 0:
            raise InvalidArgumentError("noise must be >= 0")
        self.table = table
        self.assignment = dict(assignment)
        self.noise = noise
        self.seed = seed
        self._text = MockEncoder(seed=seed, dim=table.embeddings.shape[1])

    def encode_text(self, prompt: str) -> np.ndarray:
        return self._text.encode_text(prompt)

    def encode_image(self, patch, key: str = None) -> np.ndarray:
        if key is None or key not in self.assignment:
            raise MissingKeyError(f"no planted assignment for region key {key!r}")
        base = self.table.embeddings[self.assignment[key]]
        if self.noise > 0:
            rng = _digest_rng(self.seed, "planted", key.encode())
            base = base + self.noise * rng.standard_normal(base.shape)
        return base / np.linalg.norm(base)

    def extract_features(self, patch, key: str = None) -> np.ndarray:
        return self._text.extract_features(patch)


def region_key(image_id, region_id) -> str:
    """Stable cache key for one localized region."""
    return f"{image_id}:{region_id}"
