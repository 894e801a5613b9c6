"""
ECG5000 classification vs discretization resolution m.

One covariance is estimated on the whole (discretized) training split and
shared by every series; each series is then classified on its own.
"""

import dataclasses
import logging
import os
from typing import List, Tuple

import numpy as np

from hvnet.covariance import SignalBatch, empirical_cov_matrix, normalize_cov
from hvnet.datagen import SeriesSet, discretize_series_batch, load_ucr
from hvnet.errors import DatasetError
from hvnet.helpers import derive_seed

from experiments.baselines import build_model, global_fpca_basis, series_set
from experiments.config import ExperimentConfig
from experiments.metrics import MetricRow, aggregate_repeats, sort_rows
from experiments.synthetic import fit_and_score, run_jobs

logger = logging.getLogger(__name__)

TASK = "ecg"
UCR_URL = "https://www.cs.ucr.edu/~eamonn/time_series_data_2018/"


def check_paths(train_path: str, test_path: str) -> None:
    missing = [p for p in (train_path, test_path) if not p or not os.path.isfile(p)]
    if missing:
        msg = (
            f"ECG5000 files not found: {', '.join(str(p) for p in missing)}. "
            f"Expected ECG5000_TRAIN.tsv and ECG5000_TEST.tsv from {UCR_URL}, passed via --train/--test"
        )
        logger.error(msg)
        raise DatasetError(msg)


def majority_rate(labels: np.ndarray) -> float:
    return float(np.bincount(labels).max() / labels.shape[0])


def _ecg_job(args) -> List[MetricRow]:
    _, m, seed, cfg, train, test = args
    train_x = discretize_series_batch(train.series, m)
    test_x = discretize_series_batch(test.series, m)
    cov = normalize_cov(empirical_cov_matrix(SignalBatch(train_x.T)))
    settings = dataclasses.replace(cfg.model, fpca_scores=min(cfg.model.fpca_scores, m))
    basis = global_fpca_basis(train_x, settings.fpca_scores)
    num_classes = int(max(train.labels.max(), test.labels.max())) + 1

    rows = []
    for kind in cfg.models:
        model = build_model(kind, settings, 1, num_classes)
        train_set = series_set(kind, train_x, train.labels, cov, basis)
        test_set = series_set(kind, test_x, test.labels, cov, basis)
        train_acc, test_acc, loss, wall_ms = fit_and_score(
            kind, model, train_set, test_set, cfg, derive_seed(seed, TASK, m, kind)
        )
        rows.append(MetricRow(TASK, kind, "m", float(m), seed, train_acc, test_acc, loss, wall_ms))
    return rows


def load_ecg(train_path: str, test_path: str) -> Tuple[SeriesSet, SeriesSet]:
    check_paths(train_path, test_path)
    train, test = load_ucr(train_path, test_path)
    if len(train) == 0 or len(test) == 0:
        raise DatasetError("ECG splits must be nonempty")
    logger.info(f"Majority-class rate on the test split: {majority_rate(test.labels):.3f}")
    return train, test


def run_ecg(cfg: ExperimentConfig, train_path: str, test_path: str) -> List[MetricRow]:
    """
    Rows for every m in cfg.ecg_m_grid and every model.

    Raises:
        DatasetError: The UCR files are missing (the message names them).
    """
    train, test = load_ecg(train_path, test_path)
    length = train.series.shape[1]
    grid = [m for m in cfg.ecg_m_grid if 1 <= m <= length]
    skipped = sorted(set(cfg.ecg_m_grid) - set(grid))
    if skipped:
        logger.warning(f"Skipping m values outside 1..{length}: {skipped}")
    jobs = [(TASK, int(m), cfg.seed + r, cfg, train, test) for m in grid for r in range(cfg.repeats)]
    rows = sort_rows(run_jobs(_ecg_job, jobs, cfg.workers))
    return aggregate_repeats(rows) if cfg.repeats > 1 else rows
