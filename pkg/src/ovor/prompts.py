"""Category prompt templates and Avg Phrase text embeddings.

Each category yields three fixed prompt strings (applied verbatim, no
article correction); their text embeddings are averaged and re-normalized
into a single per-category "Avg Phrase" vector. The vocabulary always
carries a trailing catch-all category named "something else".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ovor.errors import DegenerateEmbeddingError, InvalidArgumentError

EMBED_DIM = 512
SOMETHING_ELSE = "something else"
SOMETHING_ELSE_SUPER = "object"


@dataclass(frozen=True)
class CategorySpec:
    name: str
    supercategory: str
    index: int


@dataclass
class CategoryTable:
    """Vocabulary + C x D matrix of Avg Phrase embeddings, row i = index i."""

    categories: list = field(default_factory=list)
    embeddings: np.ndarray = None

    def __len__(self):
        return len(self.categories)

    @property
    def names(self):
        return [c.name for c in self.categories]

    def index_of(self, name: str) -> int:
        for c in self.categories:
            if c.name == name:
                return c.index
        raise KeyError(name)


def build_prompts(category: CategorySpec) -> list[str]:
    """The three template phrases for one category, in fixed order."""
    name, sup = category.name, category.supercategory
    return [
        f"a photo of a {sup} such as {name}",
        f"this is a {name} of a {sup}",
        f"a photo of {name}",
    ]


def normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v)
    if norm < 1e-8:
        raise DegenerateEmbeddingError(f"cannot normalize vector with norm {norm:g}")
    return v / norm


def avg_phrase(embeddings) -> np.ndarray:
    """Mean of the three phrase embeddings, re-normalized to unit length."""
    arr = np.asarray(embeddings, dtype=np.float64)
    if arr.shape[0] != 3:
        raise InvalidArgumentError(f"expected 3 phrase embeddings, got {arr.shape[0]}")
    norms = np.linalg.norm(arr, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-4):
        raise InvalidArgumentError("phrase embeddings must be unit-norm within 1e-4")
    return normalize(arr.mean(axis=0))


def make_vocabulary(entries) -> list[CategorySpec]:
    """Dense-index a (name, supercategory) list, appending "something else"."""
    names = [e[0] for e in entries]
    if not names:
        raise InvalidArgumentError("vocabulary must be non-empty")
    if len(set(names)) != len(names):
        raise InvalidArgumentError("duplicate category names in vocabulary")
    specs = [CategorySpec(name=n, supercategory=s, index=i) for i, (n, s) in enumerate(entries)]
    if SOMETHING_ELSE not in names:
        specs.append(CategorySpec(SOMETHING_ELSE, SOMETHING_ELSE_SUPER, len(specs)))
    return specs


def load_vocabulary(path) -> list[CategorySpec]:
    """Read a JSON array of {"name", "supercategory"} objects."""
    with open(path) as f:
        raw = json.load(f)
    return make_vocabulary(
        [(e["name"], e.get("supercategory", SOMETHING_ELSE_SUPER)) for e in raw]
    )


def build_category_table(vocab, text_encoder) -> CategoryTable:
    """Encode the 3 prompts of every category and store Avg Phrase rows.

    ``text_encoder`` is any callable/backend exposing encode_text(prompt).
    """
    specs = list(vocab)
    if not specs:
        raise InvalidArgumentError("vocabulary must be non-empty")
    if all(c.name != SOMETHING_ELSE for c in specs):
        specs = make_vocabulary([(c.name, c.supercategory) for c in specs])
    rows = [None] * len(specs)
    for spec in specs:
        try:
            phrase_embs = [text_encoder.encode_text(p) for p in build_prompts(spec)]
        except Exception as exc:
            raise type(exc)(f"text encoding failed for category {spec.name!r}: {exc}") from exc
        rows[spec.index] = avg_phrase(np.stack(phrase_embs))
    return CategoryTable(categories=specs, embeddings=np.stack(rows))
