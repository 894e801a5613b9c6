import os
import shutil
import tempfile
import unittest

import numpy as np
from numpy.testing import assert_allclose

from hvnet.covariance import SignalBatch
from hvnet.datagen import (
    Bag,
    GPSpec,
    SyntheticTaskConfig,
    add_awgn,
    awgn_variance,
    bags_to_features,
    channel_covariance,
    discretize_series,
    discretize_series_batch,
    gp_kernel_matrix,
    load_ucr,
    make_bag,
    make_synthetic_dataset,
    measured_snr_db,
    sample_gp_bag,
)
from hvnet.errors import (
    ConfigError,
    DatasetError,
    InvalidInputError,
    ParseError,
    ShapeError,
    UndefinedSNRError,
)
from hvnet.helpers import derive_seed
from hvnet.linalg import sym_eigendecomp


class TestGaussianProcess(unittest.TestCase):
    def test_channel_covariances(self):
        assert_allclose(channel_covariance(GPSpec(channels=3, label=0)), np.eye(3))
        assert_allclose(
            channel_covariance(GPSpec(channels=3, rho=0.5, label=1)),
            [[1.0, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 1.0]],
        )

    def test_kernel_layout(self):
        spec = GPSpec(channels=2, label=1, grid_size=4)
        k = gp_kernel_matrix(spec)
        self.assertEqual(k.shape, (8, 8))
        # Same time point, channels 0 and 1.
        self.assertAlmostEqual(k[0, 1], spec.rho)
        self.assertAlmostEqual(k[0, 2], np.exp(-(0.25 ** 2) / (2 * 0.2 ** 2)))

    def test_classes_share_the_temporal_factor(self):
        k0 = gp_kernel_matrix(GPSpec(channels=3, label=0, grid_size=8))
        k1 = gp_kernel_matrix(GPSpec(channels=3, label=1, grid_size=8))
        # Flat index a * d + c: equal (t, s) with equal channels (c, c).
        same_channel = np.equal.outer(np.arange(24) % 3, np.arange(24) % 3)
        assert_allclose(k1[same_channel], k0[same_channel])
        assert_allclose(np.diag(k1) / np.diag(k0), 1.0)
        self.assertTrue(np.all(k0[~same_channel] == 0.0))

    def test_sample_covariance_matches_kernel(self):
        spec = GPSpec(channels=2, label=1, grid_size=16)
        draws = sample_gp_bag(spec, 8000, np.random.default_rng(3))
        flat = np.stack([d.values.ravel() for d in draws])
        empirical = flat.T @ flat / flat.shape[0]
        assert_allclose(empirical, gp_kernel_matrix(spec), atol=0.12)

    def test_draw_shapes_and_determinism(self):
        spec = GPSpec(channels=3, grid_size=32)
        first = sample_gp_bag(spec, 5, np.random.default_rng(1))
        second = sample_gp_bag(spec, 5, np.random.default_rng(1))
        self.assertEqual(len(first), 5)
        self.assertEqual(first[0].shape, (32, 3))
        np.testing.assert_array_equal(first[4].values, second[4].values)

    def test_invalid_specs(self):
        with self.assertRaises(InvalidInputError):
            GPSpec(rho=1.0)
        with self.assertRaises(InvalidInputError):
            GPSpec(label=2)
        with self.assertRaises(InvalidInputError):
            sample_gp_bag(GPSpec(grid_size=8), 0, np.random.default_rng(0))


class TestNoise(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(5)
        self.batch = SignalBatch(self.rng.standard_normal((40, 200)))

    def test_variance_hits_target_snr(self):
        for snr in (-10.0, 0.0, 30.0):
            variance = awgn_variance(self.batch, snr)
            self.assertAlmostEqual(measured_snr_db(self.batch, variance), snr, places=10)

    def test_noise_level(self):
        noisy = add_awgn(self.batch, 0.0, self.rng)
        noise = noisy.columns - self.batch.columns
        expected = awgn_variance(self.batch, 0.0)
        self.assertAlmostEqual(float(noise.var()), expected, delta=0.1 * expected)

    def test_infinite_snr_is_noiseless(self):
        self.assertIs(add_awgn(self.batch, float("inf"), self.rng), self.batch)

    def test_zero_batch(self):
        with self.assertRaises(UndefinedSNRError):
            add_awgn(SignalBatch(np.zeros((3, 4))), 10.0, self.rng)


class TestSyntheticDataset(unittest.TestCase):
    def setUp(self):
        self.task = SyntheticTaskConfig(
            channels=2, bins=8, n=6, train_bags_per_class=2, test_bags_per_class=1, grid_size=64
        )

    def test_bag_contents(self):
        bag = make_bag(self.task, 1, seed=11)
        self.assertEqual(bag.signals.columns.shape, (self.task.m, 6))
        assert_allclose(bag.signals.mean(), 0.0, atol=1e-12)
        es = sym_eigendecomp(bag.covariance.matrix, psd=True)
        self.assertAlmostEqual(es.lambda_max, 1.0, places=6)

    def test_dataset_layout_and_regeneration(self):
        train, test = make_synthetic_dataset(self.task, seed=7)
        self.assertEqual([b.label for b in train], [0, 1, 0, 1])
        self.assertEqual([b.label for b in test], [0, 1])
        again = make_bag(self.task, 1, derive_seed(7, "train", 1, 0))
        np.testing.assert_array_equal(again.signals.columns, train[1].signals.columns)

    def test_seeds_give_distinct_datasets(self):
        first, _ = make_synthetic_dataset(self.task, seed=1)
        second, _ = make_synthetic_dataset(self.task, seed=2)
        self.assertFalse(np.allclose(first[0].signals.columns, second[0].signals.columns))

    def test_features_stack(self):
        train, _ = make_synthetic_dataset(self.task, seed=3)
        features, shifts, labels = bags_to_features(train)
        self.assertEqual(features.shape, (4, self.task.m, 6))
        self.assertEqual(shifts.shape, (4, self.task.m, self.task.m))
        self.assertEqual(labels.tolist(), [0, 1, 0, 1])

    def test_stack_errors(self):
        with self.assertRaises(DatasetError):
            bags_to_features([])
        with self.assertRaises(DatasetError):
            bags_to_features([Bag(SignalBatch(np.ones((3, 2))), 0)])

    def test_invalid_task(self):
        with self.assertRaises(ConfigError):
            SyntheticTaskConfig(n=1)
        with self.assertRaises(ConfigError):
            SyntheticTaskConfig(bins=7, grid_size=64)


class TestUcrLoader(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp(prefix="hvnet_ucr_")

    def tearDown(self):
        if os.path.exists(self.test_dir):
            shutil.rmtree(self.test_dir)

    def _write(self, name, text):
        path = os.path.join(self.test_dir, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path

    def test_tab_and_comma_files(self):
        train = self._write("train.tsv", "1\t0.5\t1.5\t2.0\n\n3\t1.0\t1.0\t1.0\n")
        test = self._write("test.csv", "5,0.0,0.0,1.0\n1,2.0,2.0,2.0\n")
        train_set, test_set = load_ucr(train, test)
        self.assertEqual(train_set.labels.tolist(), [0, 1])
        self.assertEqual(test_set.labels.tolist(), [2, 0])
        assert_allclose(train_set.series[0], [0.5, 1.5, 2.0])
        self.assertEqual(len(test_set), 2)

    def test_whitespace_and_float_labels(self):
        train = self._write("train.txt", "  1.0000000e+00   0.1  0.2\n2.0 0.3 0.4\n")
        test = self._write("test.txt", "2 0.5 0.6\n")
        train_set, test_set = load_ucr(train, test)
        self.assertEqual(train_set.labels.tolist(), [0, 1])
        self.assertEqual(test_set.labels.tolist(), [1])

    def test_malformed_row_reports_line(self):
        train = self._write("train.tsv", "1\t0.5\t1.5\n2\tabc\t1.0\n")
        test = self._write("test.tsv", "1\t0.5\t1.5\n")
        with self.assertRaises(ParseError) as ctx:
            load_ucr(train, test)
        self.assertEqual(ctx.exception.line, 2)
        self.assertIn("train.tsv:2", str(ctx.exception))

    def test_non_finite_fields_report_line(self):
        test = self._write("test.tsv", "1\t0.5\t1.5\n")
        for name, row in (("nan_label.tsv", "nan\t0.3\t0.4\n"), ("inf_value.tsv", "2\tinf\t0.4\n")):
            train = self._write(name, "1\t0.1\t0.2\n" + row)
            with self.assertRaises(ParseError) as ctx:
                load_ucr(train, test)
            self.assertEqual(ctx.exception.line, 2)

    def test_length_mismatch(self):
        train = self._write("train.tsv", "1\t0.5\t1.5\n")
        test = self._write("test.tsv", "1\t0.5\t1.5\t2.5\n")
        with self.assertRaises(ShapeError):
            load_ucr(train, test)
        with self.assertRaises(ShapeError):
            load_ucr(train, train, length=3)

    def test_missing_and_empty_files(self):
        present = self._write("train.tsv", "1\t0.5\n")
        with self.assertRaises(DatasetError):
            load_ucr(present, os.path.join(self.test_dir, "missing.tsv"))
        with self.assertRaises(DatasetError):
            load_ucr(present, self._write("empty.tsv", "\n\n"))


class TestSeriesDiscretization(unittest.TestCase):
    def test_uneven_bins(self):
        out = discretize_series(np.ones(10), 3)
        # Bins hold 4, 3 and 3 points.
        assert_allclose(out, np.sqrt(0.1 * np.array([4.0, 3.0, 3.0])))
        self.assertAlmostEqual(float(out @ out), 1.0)

    def test_full_resolution(self):
        x = np.random.default_rng(2).standard_normal(12)
        assert_allclose(discretize_series(x, 12), x / np.sqrt(12))

    def test_batch_matches_rows(self):
        rows = np.random.default_rng(4).standard_normal((3, 20))
        batch = discretize_series_batch(rows, 7)
        for i in range(3):
            assert_allclose(batch[i], discretize_series(rows[i], 7))

    def test_resolution_range(self):
        with self.assertRaises(InvalidInputError):
            discretize_series(np.ones(5), 6)
        with self.assertRaises(InvalidInputError):
            discretize_series(np.ones(5), 0)


if __name__ == "__main__":
    unittest.main()
