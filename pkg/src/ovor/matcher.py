"""Similarity matching: cosine -> softmax -> threshold -> prediction.

Each object row is compared against every category row by cosine
similarity; the similarity vector is softmaxed into a probability
distribution, and the argmax category is kept only if its probability
reaches the threshold theta (strict comparison; below theta the region
is discarded).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ovor.errors import DegenerateEmbeddingError, InvalidArgumentError

DISCARDED = -1


@dataclass
class Prediction:
    region_id: int
    category_index: int  # DISCARDED (-1) when below threshold
    probability: float
    similarities: np.ndarray = field(repr=False, default=None)
    probabilities: np.ndarray = field(repr=False, default=None)

    @property
    def discarded(self) -> bool:
        return self.category_index == DISCARDED


def cosine_sim(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu <= 1e-12 or nv <= 1e-12:
        raise DegenerateEmbeddingError("cosine of a (near-)zero vector is undefined")
    return float(u @ v / (nu * nv))


def similarity_matrix(objects, categories) -> np.ndarray:
    """Pairwise cosine similarities, objects as rows, categories as columns."""
    O = np.atleast_2d(np.asarray(objects, dtype=np.float64))
    C = np.atleast_2d(np.asarray(categories, dtype=np.float64))
    if O.shape[1] != C.shape[1]:
        raise InvalidArgumentError(
            f"dimension mismatch: objects {O.shape} vs categories {C.shape}"
        )
    o_norms = np.linalg.norm(O, axis=1)
    c_norms = np.linalg.norm(C, axis=1)
    for name, norms in (("object", o_norms), ("category", c_norms)):
        bad = np.nonzero(norms <= 1e-12)[0]
        if bad.size:
            raise DegenerateEmbeddingError(f"{name} row {bad[0]} has (near-)zero norm")
    return (O @ C.T) / np.outer(o_norms, c_norms)


def softmax(row) -> np.ndarray:
    """Overflow-safe softmax (max subtraction)."""
    s = np.asarray(row, dtype=np.float64)
    if s.size == 0:
        raise InvalidArgumentError("softmax of an empty row")
    if not np.all(np.isfinite(s)):
        raise InvalidArgumentError("softmax inputs must be finite")
    e = np.exp(s - s.max())
    return e / e.sum()


def classify(probs, theta: float, region_id: int = 0, similarities=None) -> Prediction:
    """Argmax with lowest-index tie-break; discard iff max prob < theta."""
    p = np.asarray(probs, dtype=np.float64)
    if p.size == 0:
        raise InvalidArgumentError("cannot classify an empty distribution")
    if not (0.0 <= theta <= 1.0):
        raise InvalidArgumentError(f"theta must be in [0, 1], got {theta}")
    best = int(np.argmax(p))  # argmax returns the first maximum
    best_p = float(p[best])
    idx = DISCARDED if best_p < theta else best
    return Prediction(
        region_id=region_id,
        category_index=idx,
        probability=best_p,
        similarities=None if similarities is None else np.asarray(similarities),
        probabilities=p,
    )


def match_regions(object_rows, category_rows, theta: float) -> list[Prediction]:
    """Classify every object row against the category rows."""
    if np.asarray(object_rows).size == 0:
        return []
    sims = similarity_matrix(object_rows, category_rows)
    return [
        classify(softmax(sims[i]), theta, region_id=i, similarities=sims[i])
        for i in range(sims.shape[0])
    ]
