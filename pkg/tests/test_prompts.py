import numpy as np
import pytest

from ovor.encoders import MockEncoder
from ovor.errors import DegenerateEmbeddingError, InvalidArgumentError
from ovor.prompts import (
    SOMETHING_ELSE,
    CategorySpec,
    avg_phrase,
    build_category_table,
    build_prompts,
    load_vocabulary,
    make_vocabulary,
)


class TestBuildPrompts:
    def test_cat_animal_templates(self):
        spec = CategorySpec("cat", "animal", 0)
        assert build_prompts(spec) == [
            "a photo of a animal such as cat",
            "this is a cat of a animal",
            "a photo of cat",
        ]

    def test_pizza_food_templates(self):
        spec = CategorySpec("pizza", "food", 0)
        assert build_prompts(spec) == [
            "a photo of a food such as pizza",
            "this is a pizza of a food",
            "a photo of pizza",
        ]

    def test_something_else_verbatim(self):
        spec = CategorySpec(SOMETHING_ELSE, "object", 0)
        assert build_prompts(spec) == [
            "a photo of a object such as something else",
            "this is a something else of a object",
            "a photo of something else",
        ]


class TestAvgPhrase:
    def test_identical_vectors_unchanged(self):
        v = np.zeros(8)
        v[3] = 1.0
        out = avg_phrase(np.stack([v, v, v]))
        assert np.allclose(out, v)

    def test_closed_form(self):
        e1 = np.zeros(8); e1[0] = 1.0
        e2 = np.zeros(8); e2[1] = 1.0
        out = avg_phrase(np.stack([e1, e2, e2]))
        assert out[0] == pytest.approx(0.44721, abs=1e-4)
        assert out[1] == pytest.approx(0.89443, abs=1e-4)
        assert np.allclose(out[2:], 0)

    def test_opposed_pair_cancels_to_v(self):
        v = np.zeros(4); v[2] = 1.0
        out = avg_phrase(np.stack([v, -v, v]))
        assert np.allclose(out, v)

    def test_degenerate_mean_rejected(self):
        # three unit vectors at 120 degrees sum to (numerically) zero
        angles = 2 * np.pi * np.arange(3) / 3
        rows = np.zeros((3, 4))
        rows[:, 0] = np.cos(angles)
        rows[:, 1] = np.sin(angles)
        with pytest.raises(DegenerateEmbeddingError):
            avg_phrase(rows)

    def test_non_unit_inputs_rejected(self):
        with pytest.raises(InvalidArgumentError):
            avg_phrase(np.ones((3, 4)))

    def test_permutation_invariant(self):
        rng = np.random.default_rng(0)
        rows = rng.standard_normal((3, 16))
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
        a = avg_phrase(rows)
        b = avg_phrase(rows[[2, 0, 1]])
        assert np.allclose(a, b, atol=1e-12)

    def test_output_unit_norm(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            rows = rng.standard_normal((3, 32))
            rows /= np.linalg.norm(rows, axis=1, keepdims=True)
            assert np.linalg.norm(avg_phrase(rows)) == pytest.approx(1.0, abs=1e-6)


class TestVocabulary:
    def test_something_else_appended(self):
        vocab = make_vocabulary([("cat", "animal")])
        assert vocab[-1].name == SOMETHING_ELSE
        assert vocab[-1].supercategory == "object"
        assert [c.index for c in vocab] == [0, 1]

    def test_empty_rejected(self):
        with pytest.raises(InvalidArgumentError):
            make_vocabulary([])

    def test_duplicates_rejected(self):
        with pytest.raises(InvalidArgumentError):
            make_vocabulary([("cat", "a"), ("cat", "b")])

    def test_load_from_json(self, tmp_path):
        path = tmp_path / "vocab.json"
        path.write_text('[{"name": "cat", "supercategory": "animal"}, {"name": "car"}]')
        vocab = load_vocabulary(path)
        assert [c.name for c in vocab] == ["cat", "car", SOMETHING_ELSE]
        assert vocab[1].supercategory == "object"


class TestCategoryTable:
    def test_shape_includes_something_else(self, mock_text_encoder):
        vocab = make_vocabulary([("cat", "animal"), ("dog", "animal")])
        table = build_category_table(vocab, mock_text_encoder)
        assert table.embeddings.shape == (3, 512)
        assert table.names[-1] == SOMETHING_ELSE

    def test_rows_unit_norm_and_positional(self, small_table):
        norms = np.linalg.norm(small_table.embeddings, axis=1)
        assert np.allclose(norms, 1.0, atol=1e-6)
        for i, spec in enumerate(small_table.categories):
            assert spec.index == i

    def test_deterministic(self, mock_text_encoder):
        vocab = make_vocabulary([("cat", "animal"), ("dog", "animal")])
        a = build_category_table(vocab, mock_text_encoder)
        b = build_category_table(vocab, MockEncoder(seed=0))
        assert np.array_equal(a.embeddings, b.embeddings)

    def test_encoder_failure_names_category(self):
        class Broken:
            def encode_text(self, prompt):
                raise RuntimeError("backend down")

        vocab = make_vocabulary([("cat", "animal")])
        with pytest.raises(RuntimeError, match="cat"):
            build_category_table(vocab, Broken())
