#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Data generation and ingestion for HVNet

  - Multichannel Gaussian-process bags with separable kernel
    K(t, s) = k_t(t, s) Sigma_c, k_t squared-exponential, Sigma_c = I (class 0)
    or [rho^|i-j|] (class 1).
  - Additive white Gaussian noise at a target SNR.
  - The balanced synthetic bag-classification dataset.
  - UCR-format time-series files and their bin-averaged discretization.
"""

import logging
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from hvnet.covariance import CovMatrix, SignalBatch, empirical_cov_matrix, normalize_cov
from hvnet.discretize import DEFAULT_GRID_SIZE, BinAverageOp, FunctionGrid, bin_average_forward, gaussian_kernel
from hvnet.errors import (
    ConfigError,
    DatasetError,
    InvalidInputError,
    NotPSDError,
    ParseError,
    ShapeError,
    UndefinedSNRError,
)
from hvnet.helpers import as_float_array, derive_seed
from hvnet.linalg import cholesky_psd

logger = logging.getLogger(__name__)

GP_JITTER = 1e-10
GP_MAX_JITTER = 1e-6


@dataclass(frozen=True)
class GPSpec:
    channels: int = 4
    length_scale: float = 0.2
    rho: float = 0.7
    label: int = 0
    grid_size: int = DEFAULT_GRID_SIZE

    def __post_init__(self):
        if self.channels < 1 or self.grid_size < 1:
            raise InvalidInputError(f"channels and grid size must be positive: {self}")
        if self.length_scale <= 0:
            raise InvalidInputError(f"length scale must be positive, got {self.length_scale}")
        if not 0.0 < self.rho < 1.0:
            raise InvalidInputError(f"rho must lie in (0, 1), got {self.rho}")
        if self.label not in (0, 1):
            raise InvalidInputError(f"label must be 0 or 1, got {self.label}")


@dataclass(frozen=True, eq=False)
class Bag:
    signals: SignalBatch
    label: int
    covariance: Optional[CovMatrix] = None


def temporal_kernel(spec: GPSpec) -> np.ndarray:
    """k_t(t_a, t_b) on the left grid points t_a = a / M."""
    t = np.arange(spec.grid_size) / spec.grid_size
    return gaussian_kernel(spec.length_scale)(t[:, None], t[None, :])


def channel_covariance(spec: GPSpec) -> np.ndarray:
    if spec.label == 0:
        return np.eye(spec.channels)
    idx = np.arange(spec.channels)
    return spec.rho ** np.abs(idx[:, None] - idx[None, :])


def gp_kernel_matrix(spec: GPSpec) -> np.ndarray:
    """K[(a, c), (b, c')] = k_t(t_a, t_b) Sigma_c[c, c'] at flat index a * d + c."""
    return np.kron(temporal_kernel(spec), channel_covariance(spec))


@lru_cache(maxsize=8)
def _temporal_factor(grid_size: int, length_scale: float) -> np.ndarray:
    k_t = temporal_kernel(GPSpec(length_scale=length_scale, grid_size=grid_size))
    jitter = GP_JITTER
    while True:
        try:
            return cholesky_psd(k_t, jitter=jitter)
        except NotPSDError:
            if jitter >= GP_MAX_JITTER:
                raise
            logger.warning(f"Temporal kernel Cholesky failed with jitter {jitter:.0e}; retrying")
            jitter *= 10.0


@lru_cache(maxsize=8)
def _channel_factor(channels: int, rho: float, label: int) -> np.ndarray:
    return cholesky_psd(channel_covariance(GPSpec(channels=channels, rho=rho, label=label)))


def sample_gp_bag(spec: GPSpec, n: int, rng: np.random.Generator) -> List[FunctionGrid]:
    """
    n i.i.d. draws from GP(0, K), each an M x d FunctionGrid.

    The Cholesky factor of K = K_t kron Sigma_c is L_t kron L_c, so each draw is
    L_t Z L_c^T for a standard normal M x d matrix Z. The factors are cached.

    Raises:
        InvalidInputError: n < 1.
        NotPSDError: The temporal kernel stays indefinite after jitter.
    """
    if n < 1:
        raise InvalidInputError(f"bag size must be at least 1, got {n}")
    l_t = _temporal_factor(spec.grid_size, spec.length_scale)
    l_c = _channel_factor(spec.channels, spec.rho, spec.label)
    z = rng.standard_normal((n, spec.grid_size, spec.channels))
    draws = np.matmul(np.matmul(l_t, z), l_c.T)
    return [FunctionGrid(d) for d in draws]


def mean_squared_norm(batch: SignalBatch) -> float:
    """(1/n) sum_i ||x_i||^2."""
    return float(np.mean(np.sum(batch.columns ** 2, axis=0)))


def awgn_variance(batch: SignalBatch, snr_db: float) -> float:
    """
    Per-component noise variance for the target SNR.

    Raises:
        UndefinedSNRError: The batch is all zero.
    """
    power = mean_squared_norm(batch)
    if power == 0.0:
        raise UndefinedSNRError("SNR is undefined for an all-zero batch")
    return power / 10.0 ** (snr_db / 10.0)


def measured_snr_db(batch: SignalBatch, noise_variance: float) -> float:
    return float(10.0 * np.log10(mean_squared_norm(batch) / noise_variance))


def add_awgn(batch: SignalBatch, snr_db: float, rng: np.random.Generator) -> SignalBatch:
    """batch + i.i.d. N(0, sigma^2) noise; snr_db = inf returns the batch unchanged."""
    if np.isposinf(snr_db):
        return batch
    variance = awgn_variance(batch, snr_db)
    noise = rng.normal(0.0, np.sqrt(variance), size=batch.columns.shape)
    return SignalBatch(batch.columns + noise)


@dataclass(frozen=True)
class SyntheticTaskConfig:
    channels: int = 4
    bins: int = 32
    n: int = 24
    snr_db: float = 30.0
    train_bags_per_class: int = 200
    test_bags_per_class: int = 100
    length_scale: float = 0.2
    rho: float = 0.7
    grid_size: int = DEFAULT_GRID_SIZE

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"bags need at least 2 samples, got n={self.n}")
        if self.train_bags_per_class < 1 or self.test_bags_per_class < 1:
            raise ConfigError("bag counts must be positive")
        if self.grid_size % self.bins:
            raise ConfigError(f"grid size {self.grid_size} is not divisible by {self.bins} bins")

    @property
    def m(self) -> int:
        return self.channels * self.bins


def make_bag(task: SyntheticTaskConfig, label: int, seed: int) -> Bag:
    """GP draw -> bin average -> AWGN -> center; carries its normalized covariance."""
    rng = np.random.default_rng(seed)
    spec = GPSpec(task.channels, task.length_scale, task.rho, label, task.grid_size)
    op = BinAverageOp(p=task.bins, d=task.channels, grid_size=task.grid_size)
    raw = SignalBatch(np.column_stack([bin_average_forward(op, x) for x in sample_gp_bag(spec, task.n, rng)]))
    centered = add_awgn(raw, task.snr_db, rng).centered()
    return Bag(signals=centered, label=label, covariance=normalize_cov(empirical_cov_matrix(centered)))


def make_synthetic_dataset(task: SyntheticTaskConfig, seed: int) -> Tuple[List[Bag], List[Bag]]:
    """
    Balanced train and test bag lists, classes interleaved.

    Bag i of class y in split s uses derive_seed(seed, s, y, i), so every bag
    can be regenerated on its own.
    """
    splits = []
    for split, per_class in (("train", task.train_bags_per_class), ("test", task.test_bags_per_class)):
        bags = [
            make_bag(task, label, derive_seed(seed, split, label, i))
            for i in range(per_class)
            for label in (0, 1)
        ]
        splits.append(bags)
    logger.info(
        f"Generated {len(splits[0])} train / {len(splits[1])} test bags "
        f"(n={task.n}, SNR={task.snr_db} dB, m={task.m})"
    )
    return splits[0], splits[1]


@dataclass(frozen=True, eq=False)
class SeriesSet:
    """Rows of series (N x L) with labels remapped to 0..K-1."""

    series: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return int(self.labels.shape[0])


def _detect_delimiter(line: str) -> Optional[str]:
    if "\t" in line:
        return "\t"
    if "," in line:
        return ","
    return None


def _read_ucr_file(path: str, length: Optional[int]) -> Tuple[np.ndarray, np.ndarray]:
    if not os.path.isfile(path):
        logger.error(f"UCR file not found: {path}")
        raise DatasetError(f"UCR file not found: {path}")
    raw_labels, rows = [], []
    delimiter = None
    detected = False
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            if not detected:
                delimiter, detected = _detect_delimiter(line), True
            fields = [x for x in line.split(delimiter) if x.strip()] if delimiter else line.split()
            try:
                values = [float(x) for x in fields]
            except ValueError as exc:
                logger.error(f"Malformed row in {path} at line {lineno}")
                raise ParseError(f"malformed row: {exc}", path=path, line=lineno) from exc
            if len(values) < 2 or not np.all(np.isfinite(values)) or values[0] != int(values[0]):
                logger.error(f"Bad label or non-finite value in {path} at line {lineno}")
                raise ParseError("expected an integer label followed by finite values", path=path, line=lineno)
            expected = length if length is not None else (len(rows[0]) if rows else None)
            if expected is not None and len(values) - 1 != expected:
                logger.error(f"Ragged series in {path} at line {lineno}")
                raise ShapeError(f"{path}:{lineno}: series has {len(values) - 1} values, expected {expected}")
            raw_labels.append(int(values[0]))
            rows.append(values[1:])
    if not rows:
        raise DatasetError(f"UCR file {path} holds no series")
    return np.array(raw_labels, dtype=np.int64), np.array(rows, dtype=np.float64)


def load_ucr(train_path: str, test_path: str, length: Optional[int] = None) -> Tuple[SeriesSet, SeriesSet]:
    """
    Read a UCR train/test pair: one series per line, integer label first.

    Fields are separated by tabs or commas (detected per file, whitespace as a
    fallback); blank lines are skipped. Labels are remapped through the sorted
    union of both files' labels, e.g. {1..5} -> {0..4}.

    Raises:
        DatasetError: A file is missing or empty.
        ParseError: A row does not parse (message carries path and line).
        ShapeError: A row has the wrong length.
    """
    train_raw, train_x = _read_ucr_file(train_path, length)
    test_raw, test_x = _read_ucr_file(test_path, length if length is not None else train_x.shape[1])
    classes = np.unique(np.concatenate([train_raw, test_raw]))
    train = SeriesSet(train_x, np.searchsorted(classes, train_raw))
    test = SeriesSet(test_x, np.searchsorted(classes, test_raw))
    logger.info(
        f"Loaded {len(train)} train / {len(test)} test series of length {train_x.shape[1]}, {classes.size} classes"
    )
    return train, test


def _series_bins(length: int, m: int) -> List[np.ndarray]:
    if not 1 <= m <= length:
        raise InvalidInputError(f"m must be in 1..{length}, got {m}")
    return np.array_split(np.arange(length), m)


def discretize_series(series, m: int) -> np.ndarray:
    """
    Bin-average a series seen as a function on [0, 1] with M = len(series)
    points; near-uniform bins, component j = sqrt(Delta / |B_j|) sum_{B_j} x.
    """
    x = as_float_array(series, "series", ndim=1)
    return discretize_series_batch(x[None, :], m)[0]


def discretize_series_batch(series, m: int) -> np.ndarray:
    """discretize_series applied to every row of an N x L array."""
    x = as_float_array(series, "series", ndim=2)
    bins = _series_bins(x.shape[1], m)
    starts = np.array([b[0] for b in bins])
    sizes = np.array([b.size for b in bins], dtype=np.float64)
    sums = np.add.reduceat(x, starts, axis=1)
    return sums * np.sqrt((1.0 / x.shape[1]) / sizes)


def bags_to_features(bags: Sequence[Bag]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack bags as (B, m, n) features, (B, m, m) covariances and labels."""
    if not bags:
        raise DatasetError("no bags to stack")
    if any(b.covariance is None for b in bags):
        raise DatasetError("every bag needs a covariance to be stacked")
    features = np.stack([b.signals.columns for b in bags])
    shifts = np.stack([b.covariance.matrix for b in bags])
    labels = np.array([b.label for b in bags], dtype=np.int64)
    if shifts.shape[1:] != (features.shape[1],) * 2:
        raise ShapeError("bag covariances do not match the signal dimension")
    return features, shifts, labels
