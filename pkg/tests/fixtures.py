"""Shared fixtures: a tiny experiment configuration and a small UCR-format dataset."""

import os

import numpy as np

from experiments.config import config_from_dict

TINY = {
    "seed": 3,
    "model": {"layers": 1, "width": 4, "taps": 1, "head_hidden": [4], "fpca_scores": 2},
    "train": {"epochs": 2, "batch_size": 4},
    "synthetic": {
        "channels": 2,
        "bins": 4,
        "n": 4,
        "train_bags_per_class": 3,
        "test_bags_per_class": 2,
        "grid_size": 16,
    },
    "n_grid": [3, 4],
    "snr_grid": [0.0, 10.0],
    "ecg_m_grid": [4, 8, 32],
}


def tiny_dict(out, **overrides):
    data = dict(TINY, out=out)
    data.update(overrides)
    return data


def tiny_config(out, **overrides):
    return config_from_dict(tiny_dict(out, **overrides))


def write_ucr_pair(directory, train_rows=24, test_rows=12, length=16, seed=0):
    """Three classes (labels 1..3) of noisy sinusoids, tab separated."""
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, length)
    paths = []
    for name, rows in (("TINY_TRAIN.tsv", train_rows), ("TINY_TEST.tsv", test_rows)):
        path = os.path.join(directory, name)
        with open(path, "w", encoding="utf-8") as f:
            for i in range(rows):
                label = i % 3 + 1
                series = np.sin(2 * np.pi * label * t) + 0.1 * rng.standard_normal(length)
                f.write("\t".join([str(label)] + [f"{v:.6f}" for v in series]) + "\n")
        paths.append(path)
    return paths
