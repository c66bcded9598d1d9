"""Joint object+category embedding matrix, z-score, and SVD projection.

Per image, the N object embeddings and C category embeddings are stacked
(objects first), standardized column-wise, and decomposed Z = U S V^T.
The latent representation is the score matrix U_k S_k (equivalently
Z V_k) with the top-k singular values retained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ovor.errors import InvalidArgumentError

STD_EPS = 1e-8


@dataclass
class JointMatrix:
    rows: np.ndarray  # (N + C) x D
    n_objects: int
    n_categories: int


@dataclass
class LatentScores:
    scores: np.ndarray  # (N + C) x k
    k: int
    singular_values: np.ndarray  # all min(rows, cols) values, nonincreasing
    v_k: np.ndarray  # D x k right singular vectors (for reconstruction)
    column_mean: np.ndarray
    column_std: np.ndarray


def concat(object_embs, category_embs) -> JointMatrix:
    """Stack object rows on top of category rows."""
    cats = np.asarray(category_embs, dtype=np.float64)
    objs = np.asarray(object_embs, dtype=np.float64)
    if objs.size == 0:
        objs = objs.reshape(0, cats.shape[1])
    if objs.ndim != 2 or cats.ndim != 2 or objs.shape[1] != cats.shape[1]:
        raise InvalidArgumentError(
            f"dimension mismatch: objects {objs.shape} vs categories {cats.shape}"
        )
    if cats.shape[0] < 1:
        raise InvalidArgumentError("need at least one category row")
    return JointMatrix(
        rows=np.vstack([objs, cats]),
        n_objects=objs.shape[0],
        n_categories=cats.shape[0],
    )


def zscore(matrix):
    """Column-wise standardization with population std and an eps guard.

    Returns (Z, means, stds). Constant columns map to all-zeros.
    """
    M = matrix.rows if isinstance(matrix, JointMatrix) else np.asarray(matrix, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < 2:
        raise InvalidArgumentError("z-score needs a matrix with at least 2 rows")
    means = M.mean(axis=0)
    stds = M.std(axis=0)  # population std (ddof=0)
    Z = (M - means) / np.maximum(stds, STD_EPS)
    return Z, means, stds


def svd_scores(Z, k: int, column_mean=None, column_std=None) -> LatentScores:
    """Truncated SVD projection scores U_k S_k of a standardized matrix.

    Columns are sign-canonicalized (largest-magnitude entry positive) so
    the output is deterministic despite SVD sign ambiguity.
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2:
        raise InvalidArgumentError("svd_scores expects a 2D matrix")
    max_k = min(Z.shape)
    if not (1 <= k <= max_k):
        raise InvalidArgumentError(f"k must be in [1, {max_k}], got {k}")
    U, s, Vt = np.linalg.svd(Z, full_matrices=False)
    scores = U[:, :k] * s[:k]
    v_k = Vt[:k].T.copy()
    # flip each column so its largest-|entry| is positive
    for j in range(k):
        col = scores[:, j]
        if col.size and col[np.argmax(np.abs(col))] < 0:
            scores[:, j] = -col
            v_k[:, j] = -v_k[:, j]
    d = Z.shape[1]
    return LatentScores(
        scores=scores,
        k=k,
        singular_values=s,
        v_k=v_k,
        column_mean=np.zeros(d) if column_mean is None else np.asarray(column_mean),
        column_std=np.ones(d) if column_std is None else np.asarray(column_std),
    )


def split_scores(latent: LatentScores, n_objects: int, n_categories: int):
    """First N rows (objects) vs last C rows (categories)."""
    rows = latent.scores.shape[0]
    if n_objects < 0 or n_categories < 0 or n_objects + n_categories != rows:
        raise InvalidArgumentError(
            f"N + C = {n_objects + n_categories} does not match {rows} score rows"
        )
    return latent.scores[:n_objects], latent.scores[n_objects:]


def project(object_embs, category_embs, k: int = None):
    """Convenience: concat -> zscore -> svd_scores -> split.

    k defaults to the category count, clamped to min(N+C, D).
    Returns (object_scores, category_scores, latent).
    """
    joint = concat(object_embs, category_embs)
    Z, means, stds = zscore(joint)
    if k is None:
        k = joint.n_categories
    k = min(k, *Z.shape)
    latent = svd_scores(Z, k, column_mean=means, column_std=stds)
    obj_s, cat_s = split_scores(latent, joint.n_objects, joint.n_categories)
    return obj_s, cat_s, latent
