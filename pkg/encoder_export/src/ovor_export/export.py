"""Export operations: prompts and crops -> OVT tensors + cache manifest.

The manifest is the JSON the consumer's file-cache backend reads:
{"entries": {key: {"path", "shape", "sha256"}}, ...}. Text keys are the
exact prompt strings; image keys are "{image_id}:{region_id}" matching
the crop filenames written by the consumer's localize stage. The
manifest is written last and atomically so partial exports are never
consumed.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from ovor_export import ovt
from ovor_export.errors import ExportError

SOMETHING_ELSE = ("something else", "object")
UNIT_NORM_TOL = 1e-5
_CROP_NAME = re.compile(r"^(?P<image_id>.+)_(?P<region_id>\d+)\.png$")


@dataclass
class ExportManifest:
    entries: dict = field(default_factory=dict)  # key -> {path, shape, sha256}
    preprocessing: str = ""
    models: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)  # key -> error message

    def to_dict(self) -> dict:
        return {
            "entries": self.entries,
            "preprocessing": self.preprocessing,
            "models": self.models,
            "failures": self.failures,
        }


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _tensor_filename(key: str) -> str:
    # keys hold spaces/colons; a digest keeps filenames flat and collision-free
    return hashlib.sha256(key.encode()).hexdigest()[:24] + ".ovt"


def _export_tensor(out_dir: Path, key: str, array: np.ndarray) -> dict:
    path = out_dir / _tensor_filename(key)
    ovt.write_ovt(path, np.asarray(array, dtype=np.float64))
    return {
        "path": path.name,
        "shape": list(np.asarray(array).shape),
        "sha256": _sha256(path),
    }


def write_manifest(manifest: ExportManifest, out_dir) -> Path:
    """Atomic write: tmp file + rename, so readers never see half a manifest."""
    out_dir = Path(out_dir)
    path = out_dir / "manifest.json"
    tmp = out_dir / ".manifest.json.tmp"
    tmp.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True))
    os.replace(tmp, path)
    return path


def load_manifest(path) -> ExportManifest:
    raw = json.loads(Path(path).read_text())
    return ExportManifest(
        entries=raw.get("entries", {}),
        preprocessing=raw.get("preprocessing", ""),
        models=raw.get("models", {}),
        failures=raw.get("failures", {}),
    )


def verify_manifest(manifest: ExportManifest, out_dir) -> None:
    """Check every entry's file exists with the declared shape and checksum."""
    out_dir = Path(out_dir)
    for key, entry in manifest.entries.items():
        path = out_dir / entry["path"]
        if not path.exists():
            raise ExportError(f"{key!r}: missing tensor file {entry['path']}")
        if _sha256(path) != entry["sha256"]:
            raise ExportError(f"{key!r}: checksum mismatch for {entry['path']}")
        if list(ovt.read_ovt(path).shape) != list(entry["shape"]):
            raise ExportError(f"{key!r}: shape mismatch for {entry['path']}")


def merge_manifests(manifest_paths, out_dir) -> ExportManifest:
    """Combine text/image/feature manifests into one cache manifest.

    Entry paths are rebased relative to ``out_dir`` so the merged file can
    sit next to (or above) the per-export directories. Later manifests win
    on duplicate keys.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    merged = ExportManifest()
    preprocessing = []
    for path in manifest_paths:
        path = Path(path)
        part = load_manifest(path)
        for key, entry in part.entries.items():
            rebased = os.path.relpath(path.parent / entry["path"], out_dir)
            merged.entries[key] = {**entry, "path": rebased}
        merged.failures.update(part.failures)
        merged.models.update(part.models)
        if part.preprocessing and part.preprocessing not in preprocessing:
            preprocessing.append(part.preprocessing)
    merged.preprocessing = "; ".join(preprocessing)
    write_manifest(merged, out_dir)
    return merged


def category_prompts(name: str, supercategory: str) -> list[str]:
    """The consumer's three fixed prompt phrases, reproduced verbatim.

    These strings are the cache keys its text lookups use, so they are
    part of the on-disk interface, not an implementation detail.
    """
    return [
        f"a photo of a {supercategory} such as {name}",
        f"this is a {name} of a {supercategory}",
        f"a photo of {name}",
    ]


def _load_vocabulary(path) -> list[tuple[str, str]]:
    raw = json.loads(Path(path).read_text())
    cats = [(e["name"], e.get("supercategory", "object")) for e in raw]
    if SOMETHING_ELSE[0] not in {n for n, _ in cats}:
        cats.append(SOMETHING_ELSE)
    return cats


def export_text_embeddings(vocabulary_path, out_dir, backend) -> ExportManifest:
    """One unit-norm 512-d tensor per prompt string (3 per category)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = ExportManifest(
        preprocessing=backend.preprocessing,
        models={"text": getattr(backend, "name", "unknown")},
    )
    for name, supercategory in _load_vocabulary(vocabulary_path):
        for prompt in category_prompts(name, supercategory):
            emb = np.asarray(backend.encode_text(prompt), dtype=np.float64)
            if abs(np.linalg.norm(emb) - 1.0) > UNIT_NORM_TOL:
                raise ExportError(f"{prompt!r}: embedding is not unit-norm")
            manifest.entries[prompt] = _export_tensor(out_dir, prompt, emb)
    write_manifest(manifest, out_dir)
    return manifest


def list_crops(crops_dir) -> dict:
    """Map "{image_id}:{region_id}" keys to crop files written by localize."""
    crops = {}
    for path in sorted(Path(crops_dir).glob("*.png")):
        m = _CROP_NAME.match(path.name)
        if m is None:
            continue
        crops[f"{m['image_id']}:{m['region_id']}"] = path
    if not crops:
        raise ExportError(f"no crops named like '<image_id>_<region_id>.png' in {crops_dir}")
    return crops


def _load_crop(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def _export_per_crop(crops_dir, out_dir, backend, encode, check) -> ExportManifest:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = ExportManifest(
        preprocessing=backend.preprocessing,
        models={"image": getattr(backend, "name", "unknown")},
    )
    # unreadable/degenerate crops are recorded, not fatal: one bad file
    # must not sink a long batch export
    for key, path in list_crops(crops_dir).items():
        try:
            tensor = encode(_load_crop(path))
            check(key, tensor)
        except Exception as exc:
            manifest.failures[key] = str(exc)
            continue
        manifest.entries[key] = _export_tensor(out_dir, key, tensor)
    write_manifest(manifest, out_dir)
    return manifest


def export_image_embeddings(crops_dir, out_dir, backend) -> ExportManifest:
    """One unit-norm 512-d CLIP image embedding per crop."""

    def check(key, emb):
        if abs(np.linalg.norm(emb) - 1.0) > UNIT_NORM_TOL:
            raise ExportError(f"{key!r}: embedding is not unit-norm")

    return _export_per_crop(crops_dir, out_dir, backend, backend.encode_image, check)


def export_cnn_features(crops_dir, out_dir, backend) -> ExportManifest:
    """One 7x7x1280 backbone feature map per crop."""

    def check(key, fmap):
        if tuple(np.asarray(fmap).shape) != (7, 7, 1280):
            raise ExportError(f"{key!r}: feature map shape {np.asarray(fmap).shape}")

    return _export_per_crop(crops_dir, out_dir, backend, backend.extract_features, check)
