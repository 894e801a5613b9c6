#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Empirical covariance estimation for HVNet

  - SignalBatch: m x n matrix whose columns are discretized signals.
  - empirical_cov_matrix: (1/n) sum (x_i - mean)(x_i - mean)^T.
  - empirical_cov_operator_apply: the same estimator acting on FunctionGrids.
  - normalize_cov: divide by the largest eigenvalue so polynomial taps stay bounded.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import linalg as sla

from hvnet.discretize import FunctionGrid
from hvnet.errors import SampleSizeError, ShapeError
from hvnet.helpers import as_float_array
from hvnet.linalg import EigenSystem, as_sym_matrix

logger = logging.getLogger(__name__)

NORMALIZE_FLOOR = 1e-12
RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class SignalBatch:
    """Column i holds the discretized signal x_i (shape m x n)."""

    columns: np.ndarray

    def __post_init__(self):
        arr = as_float_array(self.columns, "signal batch", ndim=2)
        if arr.shape[1] < 1:
            raise SampleSizeError("a signal batch needs at least one column")
        object.__setattr__(self, "columns", arr)

    @property
    def m(self) -> int:
        return self.columns.shape[0]

    @property
    def n(self) -> int:
        return self.columns.shape[1]

    def mean(self) -> np.ndarray:
        return self.columns.mean(axis=1)

    def centered(self) -> "SignalBatch":
        return SignalBatch(self.columns - self.mean()[:, None])

    @classmethod
    def from_signals(cls, signals: Sequence[np.ndarray]) -> "SignalBatch":
        return cls(np.column_stack(signals))


@dataclass(frozen=True, eq=False)
class CovMatrix:
    """Symmetric PSD empirical covariance; rank_bound = n - 1."""

    matrix: np.ndarray
    rank_bound: Optional[int] = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))


def empirical_cov_matrix(batch: SignalBatch) -> CovMatrix:
    """
    (1/n) * sum_i (x_i - mean)(x_i - mean)^T, with the 1/n scaling.

    Raises:
        SampleSizeError: Fewer than two columns.
    """
    if batch.n < 2:
        raise SampleSizeError(f"need at least 2 samples, got {batch.n}")
    x = batch.columns - batch.mean()[:, None]
    c = (x @ x.T) / batch.n
    return CovMatrix(matrix=0.5 * (c + c.T), rank_bound=batch.n - 1)


def empirical_cov_operator_apply(samples: Sequence[FunctionGrid], v: FunctionGrid) -> FunctionGrid:
    """
    C_n v = (1/n) * sum_i <x_i - mean, v> (x_i - mean) with the grid inner product.

    Raises:
        SampleSizeError: Fewer than two samples.
        ShapeError: Sample and argument grids differ.
    """
    n = len(samples)
    if n < 2:
        raise SampleSizeError(f"need at least 2 samples, got {n}")
    stack = np.stack([x.values for x in samples])
    if stack.shape[1:] != v.shape:
        raise ShapeError(f"argument grid {v.shape} does not match sample grid {stack.shape[1:]}")
    centered = stack - stack.mean(axis=0)
    weights = v.weight * np.einsum("iac,ac->i", centered, v.values)
    return FunctionGrid(np.einsum("i,iac->ac", weights, centered) / n)


def largest_eigenvalue(c) -> float:
    """
    Largest eigenvalue of a symmetric matrix from LAPACK's selected-eigenvalue
    driver (only the top eigenvalue is computed).
    """
    mat = np.asarray(c.matrix if isinstance(c, CovMatrix) else c, dtype=np.float64)
    n = mat.shape[0]
    if n == 0:
        return 0.0
    top = sla.eigh(mat, eigvals_only=True, subset_by_index=[n - 1, n - 1], check_finite=False)
    return float(top[0])


def normalize_cov(c: CovMatrix, es: Optional[EigenSystem] = None) -> CovMatrix:
    """
    Return c / lambda_max(c), or c unchanged when lambda_max <= 1e-12.

    The eigenvalue comes from es when given, otherwise from largest_eigenvalue.
    """
    lam = es.lambda_max if es is not None else largest_eigenvalue(c)
    if lam <= NORMALIZE_FLOOR:
        return c
    return CovMatrix(matrix=c.matrix / lam, rank_bound=c.rank_bound)


def covariance_rank(es: EigenSystem, rtol: float = RANK_RTOL) -> int:
    """Number of eigenvalues above rtol * lambda_max."""
    if es.dim == 0 or es.lambda_max <= 0.0:
        return 0
    return int(np.sum(es.eigenvalues > rtol * es.lambda_max))


def as_cov_matrix(c) -> CovMatrix:
    """Wrap a plain symmetric array as a CovMatrix (validating symmetry)."""
    if isinstance(c, CovMatrix):
        return c
    return CovMatrix(matrix=as_sym_matrix(c, "covariance"))
