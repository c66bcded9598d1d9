"""Triplet-trained MLP aligning CNN feature maps to the text space.

A three-layer perceptron (ReLU after layers 1-2, none after layer 3,
output L2-normalized) maps flattened 7x7x1280 feature maps into the
512-d text embedding space. Training minimizes the hinge triplet loss

    loss = max(0, d(anchor, positive) - d(anchor, negative) + margin)

where the anchor is the MLP output for a sample's features, the positive
is the text embedding of its true category, and the negative that of a
randomly drawn wrong category. Gradients are exact analytic backprop
(subgradient 0 at the hinge kink); the optimizer is Adam.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ovor import ovt
from ovor.errors import (
    DegenerateEmbeddingError,
    InvalidArgumentError,
    TrainingDivergedError,
)

DEFAULT_DIMS = (62720, 2048, 1024, 512)  # 62720 = 7 * 7 * 1280 flattened

DISTANCES = ("squared-euclidean", "euclidean", "cosine-distance")


@dataclass
class MlpParams:
    """Weights and biases of the 3-layer alignment MLP."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray

    @property
    def dims(self):
        return (self.W1.shape[0], self.W1.shape[1], self.W2.shape[1], self.W3.shape[1])

    def copy(self):
        return MlpParams(*(a.copy() for a in self.as_tuple()))

    def as_tuple(self):
        return (self.W1, self.b1, self.W2, self.b2, self.W3, self.b3)


@dataclass
class TrainConfig:
    margin: float = 0.2
    learning_rate: float = 1e-4
    batch_size: int = 64
    epochs: int = 1
    seed: int = 0
    distance: str = "squared-euclidean"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def validate(self):
        if self.epochs < 1:
            raise InvalidArgumentError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise InvalidArgumentError("learning rate must be > 0")
        if self.margin < 0:
            raise InvalidArgumentError("margin must be >= 0")
        if self.distance not in DISTANCES:
            raise InvalidArgumentError(f"unknown distance {self.distance!r}")


def init_params(dims=DEFAULT_DIMS, seed: int = 0) -> MlpParams:
    """Seeded Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    mats = []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (d_in + d_out))
        mats.append(rng.uniform(-bound, bound, size=(d_in, d_out)))
        mats.append(np.zeros(d_out))
    return MlpParams(mats[0], mats[1], mats[2], mats[3], mats[4], mats[5])


def _forward_full(params: MlpParams, x: np.ndarray):
    h1 = np.maximum(x @ params.W1 + params.b1, 0.0)
    h2 = np.maximum(h1 @ params.W2 + params.b2, 0.0)
    y = h2 @ params.W3 + params.b3
    norm = np.linalg.norm(y)
    if norm < 1e-12:
        raise DegenerateEmbeddingError("MLP produced a (near-)zero output vector")
    return x, h1, h2, y, norm


def mlp_forward(params: MlpParams, features) -> np.ndarray:
    """Run the MLP on a feature map (flattened), returning a unit vector."""
    x = np.asarray(features, dtype=np.float64).reshape(-1)
    if x.shape[0] != params.dims[0]:
        raise InvalidArgumentError(
            f"flattened feature length {x.shape[0]} != input dim {params.dims[0]}"
        )
    *_, y, norm = _forward_full(params, x)
    return y / norm


def _distance(a, b, kind: str):
    diff = a - b
    if kind == "squared-euclidean":
        return float(diff @ diff)
    if kind == "euclidean":
        return float(np.linalg.norm(diff))
    if kind == "cosine-distance":
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        return float(1.0 - (a @ b) / (na * nb))
    raise InvalidArgumentError(f"unknown distance {kind!r}")


def _distance_grad_a(a, b, kind: str):
    """d distance(a, b) / d a."""
    if kind == "squared-euclidean":
        return 2.0 * (a - b)
    if kind == "euclidean":
        n = np.linalg.norm(a - b)
        if n < 1e-12:
            return np.zeros_like(a)
        return (a - b) / n
    if kind == "cosine-distance":
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        cos = (a @ b) / (na * nb)
        return -(b / (na * nb)) + cos * a / (na * na)
    raise InvalidArgumentError(f"unknown distance {kind!r}")


def triplet_loss(a, p, n, margin: float, distance: str = "squared-euclidean") -> float:
    """Hinge triplet loss max(0, d(a,p) - d(a,n) + margin)."""
    a = np.asarray(a, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    if not (a.shape == p.shape == n.shape):
        raise InvalidArgumentError("triplet vectors must share a dimension")
    return max(0.0, _distance(a, p, distance) - _distance(a, n, distance) + margin)


def loss_gradients(
    params: MlpParams, features, positive, negative,
    margin: float, distance: str = "squared-euclidean",
):
    """(loss, grads) of the triplet loss w.r.t. every MLP parameter.

    grads is an MlpParams of matching shapes. In the inactive hinge
    region (including exactly at the kink) all gradients are zero.
    """
    x = np.asarray(features, dtype=np.float64).reshape(-1)
    p = np.asarray(positive, dtype=np.float64)
    n = np.asarray(negative, dtype=np.float64)
    x, h1, h2, y, norm = _forward_full(params, x)
    a = y / norm
    raw = _distance(a, p, distance) - _distance(a, n, distance) + margin
    zero = MlpParams(*(np.zeros_like(t) for t in params.as_tuple()))
    if raw <= 0.0:
        return 0.0, zero

    # dL/da, then back through the normalization a = y/||y||
    dL_da = _distance_grad_a(a, p, distance) - _distance_grad_a(a, n, distance)
    dL_dy = (dL_da - (dL_da @ a) * a) / norm

    grads = zero
    grads.W3 = np.outer(h2, dL_dy)
    grads.b3 = dL_dy
    dh2 = (params.W3 @ dL_dy) * (h2 > 0)
    grads.W2 = np.outer(h1, dh2)
    grads.b2 = dh2
    dh1 = (params.W2 @ dh2) * (h1 > 0)
    grads.W1 = np.outer(x, dh1)
    grads.b1 = dh1
    return raw, grads


class _Adam:
    def __init__(self, params: MlpParams, cfg: TrainConfig):
        self.cfg = cfg
        self.m = [np.zeros_like(t) for t in params.as_tuple()]
        self.v = [np.zeros_like(t) for t in params.as_tuple()]
        self.t = 0

    def step(self, params: MlpParams, grads: MlpParams):
        c = self.cfg
        self.t += 1
        new = []
        for i, (w, g) in enumerate(zip(params.as_tuple(), grads.as_tuple())):
            self.m[i] = c.beta1 * self.m[i] + (1 - c.beta1) * g
            self.v[i] = c.beta2 * self.v[i] + (1 - c.beta2) * g * g
            m_hat = self.m[i] / (1 - c.beta1 ** self.t)
            v_hat = self.v[i] / (1 - c.beta2 ** self.t)
            new.append(w - c.learning_rate * m_hat / (np.sqrt(v_hat) + c.eps))
        return MlpParams(*new)


def train(params0: MlpParams, dataset, table, cfg: TrainConfig):
    """Contrastive training loop over (feature map, category index) pairs.

    Per epoch: shuffle, iterate minibatches, and for each sample pair the
    anchor with its category's Avg Phrase embedding (positive) and one
    seeded uniformly drawn wrong category (negative). Returns
    (final params, mean loss per epoch). Fully deterministic for a fixed
    (seed, config, data).
    """
    cfg.validate()
    if not dataset:
        raise InvalidArgumentError("dataset must be non-empty")
    C = table.embeddings.shape[0]
    features = [np.asarray(f, dtype=np.float64).reshape(-1) for f, _ in dataset]
    labels = [int(c) for _, c in dataset]
    if any(not (0 <= c < C) for c in labels):
        raise InvalidArgumentError("dataset category index outside the table")

    rng = np.random.default_rng(cfg.seed)
    params = params0.copy()
    opt = _Adam(params, cfg)
    curve = []
    n = len(dataset)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for b_start in range(0, n, cfg.batch_size):
            batch = order[b_start : b_start + cfg.batch_size]
            total = MlpParams(*(np.zeros_like(t) for t in params.as_tuple()))
            batch_loss = 0.0
            for idx in batch:
                c = labels[idx]
                neg_c = int(rng.integers(C - 1))
                if neg_c >= c:
                    neg_c += 1
                loss, g = loss_gradients(
                    params, features[idx],
                    table.embeddings[c], table.embeddings[neg_c],
                    cfg.margin, cfg.distance,
                )
                if not np.isfinite(loss):
                    raise TrainingDivergedError(epoch, b_start // cfg.batch_size)
                batch_loss += loss
                for t_acc, t_g in zip(total.as_tuple(), g.as_tuple()):
                    t_acc += t_g
            scale = 1.0 / len(batch)
            mean_grads = MlpParams(*(t * scale for t in total.as_tuple()))
            params = opt.step(params, mean_grads)
            epoch_loss += batch_loss
        curve.append(epoch_loss / n)
    return params, curve


def encode_image_mlp(params: MlpParams, backend, patch, key: str = None) -> np.ndarray:
    """Feature extraction followed by the alignment MLP."""
    return mlp_forward(params, backend.extract_features(patch, key=key))


_PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")


def save_checkpoint(params: MlpParams, directory, cfg: TrainConfig = None, epoch: int = None):
    """Write params as OVT tensors plus an mlp.json metadata file."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, tensor in zip(_PARAM_NAMES, params.as_tuple()):
        ovt.write_ovt(directory / f"{name}.ovt", tensor.astype(np.float32))
    meta = {"dims": list(params.dims), "epoch": epoch}
    if cfg is not None:
        meta["config"] = {
            "margin": cfg.margin, "learning_rate": cfg.learning_rate,
            "batch_size": cfg.batch_size, "epochs": cfg.epochs,
            "seed": cfg.seed, "distance": cfg.distance,
        }
    with open(directory / "mlp.json", "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)


def load_checkpoint(directory) -> MlpParams:
    directory = Path(directory)
    tensors = [
        ovt.read_ovt(directory / f"{name}.ovt").astype(np.float64)
        for name in _PARAM_NAMES
    ]
    return MlpParams(*tensors)
