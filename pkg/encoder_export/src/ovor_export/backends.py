"""Encoder backends for the export tool.

Two families:

  * ClipBackend / EfficientNetBackend -- the real pretrained models,
    loaded lazily; anything missing (packages or weights) surfaces as
    ModelUnavailableError with setup instructions.
  * StubBackend -- deterministic digest-seeded vectors for offline use
    and hermetic tests; same output for the same input bytes.
"""

from __future__ import annotations

import hashlib

import numpy as np

from ovor_export.errors import ModelUnavailableError

EMBED_DIM = 512
FEATURE_SHAPE = (7, 7, 1280)

CLIP_MODEL_ID = "openai/clip-vit-base-patch32"
CLIP_PREPROCESSING = (
    "CLIP standard preprocessing: resize shorter side to 224, center crop "
    "224x224, RGB, scale to [0,1], normalize mean=(0.48145466, 0.4578275, "
    "0.40821073) std=(0.26862954, 0.26130258, 0.27577711)"
)
EFFICIENTNET_PREPROCESSING = (
    "torchvision EfficientNet-B0 preprocessing: resize 256, center crop 224, "
    "RGB, scale to [0,1], normalize ImageNet mean/std; features tapped at "
    "the final 7x7x1280 backbone stage before global pooling"
)


class StubBackend:
    """Digest-seeded stand-in producing stable unit vectors / feature maps."""

    name = "stub"
    preprocessing = "none (deterministic digest-seeded stub, no model executed)"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def _rng(self, kind: str, payload: bytes) -> np.random.Generator:
        digest = hashlib.sha256(
            kind.encode() + b"\x00" + str(self.seed).encode() + b"\x00" + payload
        ).digest()
        return np.random.default_rng(int.from_bytes(digest[:8], "little"))

    def encode_text(self, prompt: str) -> np.ndarray:
        v = self._rng("text", prompt.encode()).standard_normal(EMBED_DIM)
        return v / np.linalg.norm(v)

    def encode_image(self, image: np.ndarray) -> np.ndarray:
        v = self._rng("image", image.tobytes()).standard_normal(EMBED_DIM)
        return v / np.linalg.norm(v)

    def extract_features(self, image: np.ndarray) -> np.ndarray:
        rng = self._rng("features", image.tobytes())
        # non-negative, mirroring a ReLU-headed backbone
        return np.maximum(rng.standard_normal(FEATURE_SHAPE), 0.0)


class ClipBackend:
    """CLIP ViT-B/32 text + image encoders via transformers."""

    name = "clip"
    preprocessing = CLIP_PREPROCESSING

    def __init__(self):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise ModelUnavailableError(
                "CLIP backend needs torch + transformers. Install with:\n"
                "    pip install 'ovor-export[models]'"
            ) from exc
        try:
            self._model = CLIPModel.from_pretrained(CLIP_MODEL_ID)
            self._processor = CLIPProcessor.from_pretrained(CLIP_MODEL_ID)
        except Exception as exc:
            raise ModelUnavailableError(
                f"could not load pretrained weights for {CLIP_MODEL_ID!r}: {exc}\n"
                "Download them once on a connected machine:\n"
                f"    python -c \"from transformers import CLIPModel; "
                f"CLIPModel.from_pretrained('{CLIP_MODEL_ID}')\"\n"
                "then copy ~/.cache/huggingface here or set HF_HOME to the copy."
            ) from exc
        self._model.eval()
        self._torch = torch

    def encode_text(self, prompt: str) -> np.ndarray:
        inputs = self._processor(text=[prompt], return_tensors="pt", padding=True)
        with self._torch.no_grad():
            emb = self._model.get_text_features(**inputs)[0].numpy().astype(np.float64)
        return emb / np.linalg.norm(emb)

    def encode_image(self, image: np.ndarray) -> np.ndarray:
        inputs = self._processor(images=[image], return_tensors="pt")
        with self._torch.no_grad():
            emb = self._model.get_image_features(**inputs)[0].numpy().astype(np.float64)
        return emb / np.linalg.norm(emb)


class EfficientNetBackend:
    """EfficientNet-B0 feature maps (7x7x1280, before global pooling)."""

    name = "efficientnet"
    preprocessing = EFFICIENTNET_PREPROCESSING

    def __init__(self):
        try:
            import torch
            from torchvision.models import EfficientNet_B0_Weights, efficientnet_b0
        except ImportError as exc:
            raise ModelUnavailableError(
                "EfficientNet backend needs torch + torchvision. Install with:\n"
                "    pip install 'ovor-export[models]'"
            ) from exc
        try:
            weights = EfficientNet_B0_Weights.IMAGENET1K_V1
            self._model = efficientnet_b0(weights=weights)
            self._transform = weights.transforms()
        except Exception as exc:
            raise ModelUnavailableError(
                f"could not load pretrained EfficientNet-B0 weights: {exc}\n"
                "Download them once on a connected machine (they land in "
                "~/.cache/torch/hub/checkpoints) and copy that directory here, "
                "or set TORCH_HOME to a prepopulated cache."
            ) from exc
        self._model.eval()
        self._torch = torch

    def extract_features(self, image: np.ndarray) -> np.ndarray:
        from PIL import Image

        tensor = self._transform(Image.fromarray(image)).unsqueeze(0)
        with self._torch.no_grad():
            fmap = self._model.features(tensor)[0]  # 1280 x 7 x 7
        return fmap.permute(1, 2, 0).numpy().astype(np.float64)


def make_backend(name: str, seed: int = 0):
    if name == "stub":
        return StubBackend(seed=seed)
    if name == "clip":
        return ClipBackend()
    if name == "efficientnet":
        return EfficientNetBackend()
    raise ModelUnavailableError(f"unknown backend {name!r}; choose clip, efficientnet, or stub")
