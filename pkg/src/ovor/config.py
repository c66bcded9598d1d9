"""Run configuration: JSON file + flag overrides, validation, hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from ovor.errors import InvalidArgumentError

ENCODERS = ("mock", "clip-cache", "mlp", "planted-mock")


class ConfigError(InvalidArgumentError):
    """Invalid run configuration (CLI exit code 2)."""


@dataclass
class RunConfig:
    images_dir: str = None
    masks_dir: str = None
    annotations: str = None  # COCO instances JSON (optional; enables evaluate)
    vocabulary: str = None  # JSON [{name, supercategory}] (optional with annotations)
    encoder: str = "mock"
    cache_manifest: str = None  # for encoder = clip-cache
    mlp_checkpoint: str = None  # for encoder = mlp
    feature_backend: str = "mock"  # features source for the mlp encoder
    planted_assignment: str = None  # for encoder = planted-mock
    planted_noise: float = 0.0
    svd: bool = False
    k: int = None  # None = category count
    theta: float = 0.0
    min_area: int = 100
    connectivity: int = 8
    seed: int = 0
    iou_threshold: float = 0.5
    match_mode: str = "iou"  # or "identity"
    something_else_is_fp: bool = False
    out_dir: str = "out"
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def validate(self, require_data: bool = True) -> None:
        if not (0.0 <= self.theta <= 1.0):
            raise ConfigError(f"theta must be in [0, 1], got {self.theta}")
        if self.encoder not in ENCODERS:
            raise ConfigError(f"unknown encoder {self.encoder!r}, choose from {ENCODERS}")
        if self.svd and self.k is not None and self.k < 1:
            raise ConfigError("k must be >= 1 when svd is on")
        if self.min_area < 0:
            raise ConfigError("min_area must be >= 0")
        if self.connectivity not in (4, 8):
            raise ConfigError("connectivity must be 4 or 8")
        if self.match_mode not in ("iou", "identity"):
            raise ConfigError("match_mode must be 'iou' or 'identity'")
        if require_data:
            for name in ("images_dir", "masks_dir"):
                value = getattr(self, name)
                if value is None:
                    raise ConfigError(f"config field {name!r} is required")
                if not Path(value).exists():
                    raise ConfigError(f"{name} path does not exist: {value}")
            for name in ("annotations", "vocabulary", "cache_manifest",
                         "mlp_checkpoint", "planted_assignment"):
                value = getattr(self, name)
                if value is not None and not Path(value).exists():
                    raise ConfigError(f"{name} path does not exist: {value}")
            if self.annotations is None and self.vocabulary is None:
                raise ConfigError("either annotations or vocabulary must be given")
            if self.encoder == "clip-cache" and self.cache_manifest is None:
                raise ConfigError("encoder clip-cache requires cache_manifest")
            if self.encoder == "mlp" and self.mlp_checkpoint is None:
                raise ConfigError("encoder mlp requires mlp_checkpoint")
            if self.encoder == "planted-mock" and self.planted_assignment is None:
                raise ConfigError("encoder planted-mock requires planted_assignment")


def load_config(path=None, overrides: dict = None) -> RunConfig:
    """Build a RunConfig from an optional JSON file plus CLI overrides."""
    data = {}
    if path is not None:
        try:
            with open(path) as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc.msg} (line {exc.lineno})")
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    known = {f for f in RunConfig.__dataclass_fields__ if f != "extra"}
    kwargs = {k: v for k, v in data.items() if k in known}
    extra = {k: v for k, v in data.items() if k not in known}
    return RunConfig(extra=extra, **kwargs)


def load_config_template(name: str) -> RunConfig:
    """Load one of the shipped dataset templates (coco, voc, ade20k)."""
    ref = resources.files("ovor") / "configs" / f"{name}.json"
    if not ref.is_file():
        raise ConfigError(f"no config template named {name!r}")
    return load_config(str(ref))
