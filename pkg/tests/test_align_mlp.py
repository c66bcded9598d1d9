import numpy as np
import pytest

from conftest import make_synthetic_training_task
from ovor.align_mlp import (
    MlpParams,
    TrainConfig,
    encode_image_mlp,
    init_params,
    load_checkpoint,
    loss_gradients,
    mlp_forward,
    save_checkpoint,
    train,
    triplet_loss,
)
from ovor.encoders import MockEncoder
from ovor.errors import (
    DegenerateEmbeddingError,
    InvalidArgumentError,
    TrainingDivergedError,
)

SMALL_DIMS = (6, 4, 3, 2)


def identity_params(d=2):
    eye = np.eye(d)
    zero = np.zeros(d)
    return MlpParams(eye.copy(), zero.copy(), eye.copy(), zero.copy(), eye.copy(), zero.copy())


class TestForward:
    def test_identity_network_normalizes(self):
        out = mlp_forward(identity_params(), np.array([3.0, 4.0]))
        assert np.allclose(out, [0.6, 0.8])

    def test_zero_input_degenerate(self):
        with pytest.raises(DegenerateEmbeddingError):
            mlp_forward(identity_params(), np.zeros(2))

    def test_relu_blocks_negatives(self):
        out = mlp_forward(identity_params(), np.array([-5.0, 4.0]))
        assert np.allclose(out, [0.0, 1.0])

    def test_small_config_output_unit_norm(self):
        params = init_params(SMALL_DIMS, seed=0)
        rng = np.random.default_rng(0)
        checked = 0
        for _ in range(40):
            try:
                out = mlp_forward(params, rng.standard_normal(6))
            except DegenerateEmbeddingError:
                continue  # tiny ReLU nets can zero out on some inputs
            assert out.shape == (2,)
            assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-6)
            checked += 1
        assert checked >= 10

    def test_wrong_input_length_rejected(self):
        with pytest.raises(InvalidArgumentError):
            mlp_forward(init_params(SMALL_DIMS), np.zeros(7))

    def test_output_dim_512_for_feature_map_input(self):
        # full-width default hidden sizes are too heavy for a unit test;
        # same 7x7x1280 input contract with thin hidden layers
        params = init_params((62720, 16, 8, 512), seed=0)
        feats = MockEncoder(seed=1).extract_features(np.ones((3, 3, 3), dtype=np.uint8))
        out = mlp_forward(params, feats)
        assert out.shape == (512,)
        assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-6)


class TestTripletLoss:
    def _vec(self, dist_sq):
        # point at squared euclidean distance dist_sq from the origin
        v = np.zeros(4)
        v[0] = np.sqrt(dist_sq)
        return v

    def test_inactive_region_is_zero(self):
        a = np.zeros(4)
        loss = triplet_loss(a, self._vec(0.2), self._vec(0.9), margin=0.3)
        assert loss == 0.0

    def test_active_region_value(self):
        a = np.zeros(4)
        loss = triplet_loss(a, self._vec(0.8), self._vec(0.5), margin=0.2)
        assert loss == pytest.approx(0.5)

    def test_equal_positive_negative_gives_margin(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal(8)
        p = rng.standard_normal(8)
        assert triplet_loss(a, p, p, margin=0.37) == pytest.approx(0.37)

    def test_hinge_upper_bound(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            a, p, n = rng.standard_normal((3, 6))
            margin = rng.uniform(0, 1)
            loss = triplet_loss(a, p, n, margin)
            assert 0.0 <= loss <= margin + float((a - p) @ (a - p)) + 1e-12

    @pytest.mark.parametrize("distance", ["euclidean", "cosine-distance"])
    def test_other_distances(self, distance):
        rng = np.random.default_rng(2)
        a, p, n = rng.standard_normal((3, 5))
        loss = triplet_loss(a, p, n, 0.1, distance)
        assert loss >= 0.0

    def test_dim_mismatch_rejected(self):
        with pytest.raises(InvalidArgumentError):
            triplet_loss(np.zeros(3), np.zeros(4), np.zeros(4), 0.1)


def finite_difference_grads(params, features, p, n, margin, distance, step=1e-5):
    """Central finite differences over every parameter entry."""

    def loss_at(theta):
        return triplet_loss(mlp_forward(theta, features), p, n, margin, distance)

    grads = []
    for t_idx, tensor in enumerate(params.as_tuple()):
        g = np.zeros_like(tensor)
        it = np.nditer(tensor, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            plus = params.copy()
            plus.as_tuple()[t_idx][idx] += step
            minus = params.copy()
            minus.as_tuple()[t_idx][idx] -= step
            g[idx] = (loss_at(plus) - loss_at(minus)) / (2 * step)
        grads.append(g)
    return MlpParams(*grads)


class TestGradients:
    def _random_triplet(self, rng, params):
        while True:  # skip inputs the tiny ReLU net zeroes out
            features = rng.standard_normal(params.dims[0])
            try:
                mlp_forward(params, features)
                break
            except DegenerateEmbeddingError:
                continue
        p = rng.standard_normal(params.dims[3])
        p /= np.linalg.norm(p)
        n = rng.standard_normal(params.dims[3])
        n /= np.linalg.norm(n)
        return features, p, n

    def test_inactive_region_zero_gradients(self):
        params = init_params(SMALL_DIMS, seed=0)
        rng = np.random.default_rng(0)
        found = False
        for _ in range(50):
            features, p, n = self._random_triplet(rng, params)
            loss, grads = loss_gradients(params, features, p, n, margin=0.0,
                                         distance="squared-euclidean")
            if loss == 0.0:
                found = True
                for g in grads.as_tuple():
                    assert np.all(g == 0.0)
        assert found

    @pytest.mark.parametrize("distance", ["squared-euclidean", "euclidean", "cosine-distance"])
    def test_matches_finite_differences(self, distance):
        rng = np.random.default_rng(1)
        params = init_params(SMALL_DIMS, seed=3)
        checked = 0
        attempts = 0
        while checked < 5 and attempts < 60:
            attempts += 1
            features, p, n = self._random_triplet(rng, params)
            loss, grads = loss_gradients(params, features, p, n, margin=0.5, distance=distance)
            if loss <= 1e-3:  # avoid the kink neighborhood
                continue
            fd = finite_difference_grads(params, features, p, n, 0.5, distance)
            for g, g_fd in zip(grads.as_tuple(), fd.as_tuple()):
                scale = np.maximum(np.abs(g_fd), 1e-6)
                assert np.max(np.abs(g - g_fd) / scale) < 1e-4
            checked += 1
        assert checked == 5

    def test_descent_step_reduces_loss(self):
        rng = np.random.default_rng(5)
        params = init_params(SMALL_DIMS, seed=5)
        for _ in range(30):
            features, p, n = self._random_triplet(rng, params)
            loss, grads = loss_gradients(params, features, p, n, margin=0.5,
                                         distance="squared-euclidean")
            if loss <= 1e-3:
                continue
            lr = 1e-3
            stepped = MlpParams(
                *(w - lr * g for w, g in zip(params.as_tuple(), grads.as_tuple()))
            )
            new_loss = triplet_loss(
                mlp_forward(stepped, features), p, n, 0.5, "squared-euclidean"
            )
            assert new_loss < loss
            return
        pytest.fail("no active triplet found")


class TestTrain:
    def test_epochs_zero_rejected(self):
        dataset, table = make_synthetic_training_task(n_classes=3, n_samples=9)
        params = init_params((20, 8, 6, 8), seed=0)
        with pytest.raises(InvalidArgumentError):
            train(params, dataset, table, TrainConfig(epochs=0))

    def test_empty_dataset_rejected(self):
        _, table = make_synthetic_training_task(n_classes=3, n_samples=3)
        with pytest.raises(InvalidArgumentError):
            train(init_params((20, 8, 6, 8)), [], table, TrainConfig(epochs=1))

    def test_fixed_seed_bit_identical(self):
        dataset, table = make_synthetic_training_task(n_classes=4, n_samples=24)
        cfg = TrainConfig(epochs=3, batch_size=8, learning_rate=1e-3, seed=7)
        p0 = init_params((20, 8, 6, 8), seed=1)
        params_a, curve_a = train(p0, dataset, table, cfg)
        params_b, curve_b = train(p0, dataset, table, cfg)
        assert curve_a == curve_b
        for ta, tb in zip(params_a.as_tuple(), params_b.as_tuple()):
            assert np.array_equal(ta, tb)

    def test_loss_trends_down_on_separable_data(self):
        dataset, table = make_synthetic_training_task(n_classes=5, n_samples=100)
        cfg = TrainConfig(epochs=30, batch_size=16, learning_rate=1e-2, seed=0)
        _, curve = train(init_params((20, 16, 12, 8), seed=0), dataset, table, cfg)
        assert curve[-1] < curve[0]

    @pytest.mark.filterwarnings("ignore:invalid value encountered")
    def test_diverged_training_reports_location(self):
        dataset, table = make_synthetic_training_task(n_classes=3, n_samples=6)
        bad = init_params((20, 8, 6, 8), seed=0)
        bad.W1 *= np.inf
        with pytest.raises((TrainingDivergedError, DegenerateEmbeddingError)):
            train(bad, dataset, table, TrainConfig(epochs=1, learning_rate=1e-3))


class TestComposeAndCheckpoint:
    def test_encode_image_mlp_is_composition(self):
        params = init_params((7 * 7 * 1280, 8, 6, 4), seed=0)
        backend = MockEncoder(seed=2)
        patch = np.full((5, 5, 3), 9, dtype=np.uint8)
        direct = mlp_forward(params, backend.extract_features(patch))
        composed = encode_image_mlp(params, backend, patch)
        assert np.array_equal(direct, composed)

    def test_checkpoint_round_trip(self, tmp_path):
        params = init_params(SMALL_DIMS, seed=4)
        save_checkpoint(params, tmp_path / "ckpt", cfg=TrainConfig(epochs=2), epoch=2)
        loaded = load_checkpoint(tmp_path / "ckpt")
        for orig, back in zip(params.as_tuple(), loaded.as_tuple()):
            assert np.array_equal(orig.astype(np.float32).astype(np.float64), back)
        assert (tmp_path / "ckpt" / "mlp.json").exists()
