import os
import shutil
import tempfile
import unittest

import numpy as np
from numpy.testing import assert_allclose

from hvnet.errors import ConfigError, DatasetError, InvalidInputError, ShapeError
from hvnet.network import (
    AdamState,
    HVNConfig,
    HVNParams,
    LabeledSet,
    ScoreClassifierConfig,
    TrainConfig,
    accuracy,
    adam_step,
    backward,
    cross_entropy,
    forward,
    gelu,
    gelu_grad,
    hvn_layer_forward,
    init_params,
    load_params,
    match_mlp_width,
    mean_cross_entropy,
    mean_pool,
    save_params,
    train,
)


def random_shifts(rng, bags, m, n=12):
    out = np.empty((bags, m, m))
    for b in range(bags):
        x = rng.standard_normal((m, n))
        x -= x.mean(axis=1, keepdims=True)
        c = x @ x.T / n
        out[b] = c / np.linalg.eigvalsh(c)[-1]
    return out


def finite_difference_check(testcase, config, params, shifts, features, labels, step=1e-4):
    """Worst coordinate within 1e-3 and 99th percentile within 1e-4 (relative, floored at 1e-4)."""
    _, grads = backward(config, params, shifts, features, labels)
    errors = []
    for name in params.names():
        tensor = params[name]
        numeric = np.zeros_like(tensor)
        for idx in np.ndindex(tensor.shape):
            saved = tensor[idx]
            tensor[idx] = saved + step
            up = mean_cross_entropy(forward(config, params, shifts, features), labels)
            tensor[idx] = saved - step
            down = mean_cross_entropy(forward(config, params, shifts, features), labels)
            tensor[idx] = saved
            numeric[idx] = (up - down) / (2 * step)
        scale = np.maximum(np.maximum(np.abs(numeric), np.abs(grads[name])), 1e-4)
        err = np.abs(numeric - grads[name]) / scale
        testcase.assertLess(float(err.max()), 1e-3, f"gradient mismatch in {name}: {err.max():.2e}")
        errors.append(err.ravel())
    testcase.assertLess(float(np.percentile(np.concatenate(errors), 99)), 1e-4)


class TestPrimitives(unittest.TestCase):
    def test_gelu(self):
        self.assertEqual(float(gelu(0.0)), 0.0)
        self.assertAlmostEqual(float(gelu(10.0)), 10.0, places=8)
        x = np.linspace(-3, 3, 13)
        numeric = (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6
        assert_allclose(gelu_grad(x), numeric, atol=1e-7)

    def test_cross_entropy(self):
        self.assertAlmostEqual(cross_entropy([0.0, 0.0], 1), np.log(2.0))
        self.assertAlmostEqual(mean_cross_entropy(np.array([[1000.0, 0.0]]), np.array([0])), 0.0)
        with self.assertRaises(InvalidInputError):
            cross_entropy([0.0, 0.0], 2)

    def test_mean_pool(self):
        assert_allclose(mean_pool(np.arange(6.0).reshape(3, 2)), [2.0, 3.0])
        with self.assertRaises(ShapeError):
            mean_pool(np.ones(3))


class TestConfig(unittest.TestCase):
    def test_parameter_count(self):
        config = HVNConfig(widths=(4, 32, 32), taps=2, head_hidden=(64,), num_classes=2)
        self.assertEqual(config.num_params(), 3 * (4 * 32 + 32 * 32) + (32 * 64 + 64) + (64 * 2 + 2))
        self.assertEqual(init_params(config, np.random.default_rng(0)).count(), config.num_params())

    def test_mlp_width_matching(self):
        hvn = HVNConfig(widths=(4, 32, 32), taps=2)
        mlp = match_mlp_width(hvn)
        self.assertEqual(mlp.taps, 1)
        self.assertEqual(mlp.layers, hvn.layers)
        self.assertLessEqual(abs(mlp.num_params() / hvn.num_params() - 1.0), 0.05)

    def test_invalid_configs(self):
        with self.assertRaises(ConfigError):
            HVNConfig(widths=(4,))
        with self.assertRaises(ConfigError):
            HVNConfig(widths=(4, 8), nonlinearity="relu")
        with self.assertRaises(ConfigError):
            HVNConfig(widths=(4, 8), num_classes=1)
        with self.assertRaises(ConfigError):
            ScoreClassifierConfig(num_scores=0)
        with self.assertRaises(ConfigError):
            TrainConfig(epochs=0)
        with self.assertRaises(ConfigError):
            TrainConfig(beta1=1.0)


class TestLayer(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(31)
        self.m = 6
        self.c = random_shifts(self.rng, 1, self.m)[0]
        self.x = self.rng.standard_normal((self.m, 3))
        self.weights = [self.rng.standard_normal((3, 5)) for _ in range(3)]

    def test_matches_explicit_powers(self):
        expected = self.x @ self.weights[0] + self.c @ self.x @ self.weights[1] + self.c @ self.c @ self.x @ self.weights[2]
        assert_allclose(hvn_layer_forward(self.c, self.x, self.weights, "identity"), expected, atol=1e-12)

    def test_identity_shift_is_a_pointwise_mlp(self):
        w = self.weights[:2]
        out = hvn_layer_forward(np.eye(self.m), self.x, w)
        assert_allclose(out, gelu(self.x @ (w[0] + w[1])), atol=1e-12)
        assert_allclose(hvn_layer_forward(None, self.x, w), out, atol=1e-12)

    def test_identity_shift_never_mixes_components(self):
        perm = self.rng.permutation(self.m)
        out = hvn_layer_forward(None, self.x, self.weights)
        assert_allclose(hvn_layer_forward(None, self.x[perm], self.weights), out[perm], atol=1e-12)

    def test_permuting_shift_and_signal_together(self):
        perm = self.rng.permutation(self.m)
        c_perm = self.c[np.ix_(perm, perm)]
        out = hvn_layer_forward(self.c, self.x, self.weights)
        assert_allclose(hvn_layer_forward(c_perm, self.x[perm], self.weights), out[perm], atol=1e-12)

    def test_shape_errors(self):
        with self.assertRaises(ShapeError):
            hvn_layer_forward(self.c, self.x[:, :2], self.weights)
        with self.assertRaises(ShapeError):
            hvn_layer_forward(np.eye(4), self.x, self.weights)


class TestGradients(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(37)

    def test_hvn_gradient_per_bag_shifts(self):
        config = HVNConfig(widths=(8, 8, 8), taps=2, head_hidden=(16,), num_classes=3)
        params = init_params(config, self.rng)
        shifts = random_shifts(self.rng, 3, 32)
        features = self.rng.standard_normal((3, 32, 8))
        finite_difference_check(self, config, params, shifts, features, np.array([0, 2, 1]))

    def test_hvn_gradient_shared_shift(self):
        config = HVNConfig(widths=(2, 4, 3), taps=3, head_hidden=(5,), num_classes=2)
        params = init_params(config, self.rng)
        shift = random_shifts(self.rng, 1, 7)[0]
        features = self.rng.standard_normal((4, 7, 2))
        finite_difference_check(self, config, params, shift, features, np.array([0, 1, 1, 0]))

    def test_score_classifier_gradient(self):
        config = ScoreClassifierConfig(num_scores=4, head_hidden=(6,), num_classes=3)
        params = init_params(config, self.rng)
        features = self.rng.standard_normal((5, 7, 4))
        finite_difference_check(self, config, params, None, features, np.array([0, 1, 2, 1, 0]))


class TestTraining(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(41)
        self.test_dir = tempfile.mkdtemp(prefix="hvnet_network_")
        labels = np.tile([0, 1], 8)
        features = self.rng.standard_normal((16, 6, 3)) + (2.0 * labels - 1.0)[:, None, None]
        self.data = LabeledSet(features, labels, random_shifts(self.rng, 16, 6))
        self.config = HVNConfig(widths=(3, 8), taps=2, head_hidden=(16,))

    def tearDown(self):
        if os.path.exists(self.test_dir):
            shutil.rmtree(self.test_dir)

    def test_overfits_a_small_separable_set(self):
        params, history = train(self.config, TrainConfig(lr=1e-2, epochs=150, batch_size=4, log_every=50), self.data)
        self.assertEqual(history[0].epoch, 0)
        self.assertEqual(len(history), 151)
        self.assertLess(history[-1].loss, 0.1 * history[0].loss)
        self.assertEqual(accuracy(self.config, params, self.data), 1.0)

    def test_training_is_deterministic(self):
        tc = TrainConfig(epochs=3, batch_size=5, seed=9)
        first, _ = train(self.config, tc, self.data)
        second, _ = train(self.config, tc, self.data)
        for name in first.names():
            np.testing.assert_array_equal(first[name], second[name])

    def test_eval_accuracy_is_recorded(self):
        _, history = train(self.config, TrainConfig(epochs=2), self.data, eval_set=self.data.subset(np.arange(4)))
        self.assertTrue(all(0.0 <= r.eval_acc <= 1.0 for r in history))

    def test_save_and_load(self):
        params = init_params(self.config, self.rng)
        path = os.path.join(self.test_dir, "params.npz")
        save_params(path, params)
        loaded = load_params(path)
        self.assertEqual(loaded.names(), params.names())
        logits = forward(self.config, params, self.data.shifts, self.data.features)
        assert_allclose(forward(self.config, loaded, self.data.shifts, self.data.features), logits)

    def test_rejects_mismatched_params(self):
        other = init_params(HVNConfig(widths=(3, 4)), self.rng)
        with self.assertRaises(ShapeError):
            train(self.config, TrainConfig(epochs=1), self.data, params=other)

    def test_empty_sets(self):
        empty = LabeledSet(np.zeros((0, 6, 3)), np.zeros(0, dtype=int))
        with self.assertRaises(DatasetError):
            train(self.config, TrainConfig(epochs=1), empty)
        with self.assertRaises(DatasetError):
            accuracy(self.config, init_params(self.config, self.rng), empty)
        with self.assertRaises(ShapeError):
            LabeledSet(np.zeros((3, 6, 3)), np.zeros(2, dtype=int))


class TestAdam(unittest.TestCase):
    def test_first_step_moves_by_learning_rate(self):
        params = HVNParams({"w": np.array([1.0, -1.0])})
        grads = {"w": np.array([0.5, -2.0])}
        new, state = adam_step(params, grads, AdamState(), TrainConfig(lr=0.1))
        assert_allclose(new["w"], [0.9, -0.9], atol=1e-6)
        self.assertEqual(state.t, 1)

    def test_zero_learning_rate_keeps_params(self):
        params = HVNParams({"w": np.array([1.0, 2.0])})
        new, _ = adam_step(params, {"w": np.array([1.0, 1.0])}, AdamState(), TrainConfig(lr=0.0))
        assert_allclose(new["w"], params["w"])

    def test_zero_gradient_keeps_params(self):
        params = HVNParams({"w": np.array([1.0, -3.0]), "b": np.zeros(1)})
        state = AdamState()
        grads = {"w": np.zeros(2), "b": np.zeros(1)}
        for _ in range(5):
            params, state = adam_step(params, grads, state, TrainConfig(lr=0.1))
        np.testing.assert_array_equal(params["w"], [1.0, -3.0])
        np.testing.assert_array_equal(params["b"], [0.0])

    def test_constant_gradient_steps_by_learning_rate(self):
        params = HVNParams({"w": np.array([0.0, 0.0])})
        state = AdamState()
        grads = {"w": np.array([3.0, -1e-3])}
        config = TrainConfig(lr=0.01)
        for _ in range(50):
            new, state = adam_step(params, grads, state, config)
            assert_allclose(np.abs(new["w"] - params["w"]), 0.01, rtol=1e-4)
            params = new
        self.assertEqual(state.t, 50)


if __name__ == "__main__":
    unittest.main()
