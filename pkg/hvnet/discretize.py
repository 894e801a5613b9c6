#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Discretization operators for HVNet

A discretization S_m maps a Hilbert-space signal to R^m through inner products
with m representers; its adjoint S_m* rebuilds a signal in their span. This
module covers:
  - FunctionGrid: fine-grid surrogate for L^2([0, 1]; R^d) with inner product
    <u, v> = (1/M) * sum_{a,c} u[a, c] v[a, c] on the left points t_a = a / M.
  - Channelwise bin-averaging (uniform bins) and its adjoint.
  - Canonical projection of square-summable sequences and its adjoint.
  - Point evaluation in a reproducing kernel Hilbert space, its adjoint and the
    induced nonlinearity S* sigma(S v).
  - A checker for the compression identity C^(m) = S C S*.

Flattening convention: bin j (0-based) and channel c map to index j * d + c.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np

from hvnet.errors import (
    InvalidInputError,
    PartitionError,
    SampleSizeError,
    ShapeError,
    TruncationError,
)
from hvnet.helpers import as_float_array
from hvnet.linalg import PSD_CLAMP, as_sym_matrix, sym_eigendecomp

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 512


@dataclass(frozen=True, eq=False)
class FunctionGrid:
    """Channel values (M x d) of a signal on the uniform grid t_a = a / M."""

    values: np.ndarray

    def __post_init__(self):
        arr = as_float_array(self.values, "values")
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeError(f"grid values must be M x d with M, d >= 1, got shape {arr.shape}")
        object.__setattr__(self, "values", arr)

    @property
    def grid_size(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    @property
    def weight(self) -> float:
        return 1.0 / self.grid_size

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def grid_points(self) -> np.ndarray:
        return np.arange(self.grid_size) / self.grid_size

    def inner(self, other: "FunctionGrid") -> float:
        return grid_inner(self, other)

    def norm(self) -> float:
        return float(np.sqrt(grid_inner(self, self)))

    @classmethod
    def zeros(cls, grid_size: int, channels: int = 1) -> "FunctionGrid":
        return cls(np.zeros((grid_size, channels)))

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], grid_size: int, channels: int = 1) -> "FunctionGrid":
        """Sample fn(t) -> (M,) or (M, d) on the grid."""
        t = np.arange(grid_size) / grid_size
        vals = np.asarray(fn(t), dtype=np.float64)
        if vals.ndim == 1:
            vals = np.repeat(vals[:, None], channels, axis=1)
        return cls(vals)


def grid_inner(u: FunctionGrid, v: FunctionGrid) -> float:
    """Delta-weighted inner product of two FunctionGrids."""
    if u.shape != v.shape:
        raise ShapeError(f"grid shapes differ: {u.shape} vs {v.shape}")
    return float(u.weight * np.sum(u.values * v.values))


def pointwise_nonlinearity(x: FunctionGrid, sigma: Callable[[np.ndarray], np.ndarray]) -> FunctionGrid:
    """(sigma v)(t) = sigma(v(t)), applied at every grid point."""
    return FunctionGrid(sigma(x.values))


@dataclass(frozen=True)
class BinAverageOp:
    """Channelwise averaging over p uniform bins of [0, 1] for d channels."""

    p: int
    d: int = 1
    grid_size: int = DEFAULT_GRID_SIZE

    def __post_init__(self):
        if self.p < 1 or self.d < 1 or self.grid_size < 1:
            raise ShapeError(f"bins, channels and grid size must be positive: {self}")
        if self.grid_size % self.p:
            raise PartitionError(f"grid size {self.grid_size} is not divisible by {self.p} bins")

    @property
    def m(self) -> int:
        return self.p * self.d

    @property
    def bin_edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.p + 1)

    def flat_index(self, j: int, c: int) -> int:
        """Position of (bin j, channel c) in the discretized vector, 0-based."""
        return j * self.d + c


def bin_average_forward(op: BinAverageOp, x: FunctionGrid) -> np.ndarray:
    """
    (S v)_{j*d+c} = (1 / sqrt(1/p)) * Delta * sum_{t_a in B_j} v_c(t_a).

    Raises:
        PartitionError: x.grid_size is not divisible by op.p.
        ShapeError: channel count differs.
    """
    big_m, d = x.shape
    if big_m % op.p:
        raise PartitionError(f"grid size {big_m} is not divisible by {op.p} bins")
    if d != op.d:
        raise ShapeError(f"expected {op.d} channels, got {d}")
    sums = x.values.reshape(op.p, big_m // op.p, d).sum(axis=1)
    return (np.sqrt(op.p) * x.weight * sums).ravel()


def bin_average_adjoint(op: BinAverageOp, a) -> FunctionGrid:
    """
    S* a = sum_{j,c} a_{j*d+c} s_{(j,c)} with s_{(j,c)} = sqrt(p) 1_{B_j} e_c,
    returned on a grid of op.grid_size points.
    """
    a = as_float_array(a, "coefficients", ndim=1)
    if a.shape[0] != op.m:
        raise ShapeError(f"expected {op.m} coefficients, got {a.shape[0]}")
    per_bin = op.grid_size // op.p
    block = np.sqrt(op.p) * a.reshape(op.p, op.d)
    return FunctionGrid(np.repeat(block, per_bin, axis=0))


def canonical_projection(x, m: int) -> np.ndarray:
    """(S v)_j = v_j for j < m."""
    x = as_float_array(x, "sequence", ndim=1)
    if m < 0 or m > x.shape[0]:
        raise TruncationError(f"cannot keep {m} coordinates of a length-{x.shape[0]} sequence")
    return x[:m].copy()


def canonical_adjoint(a, length: int) -> np.ndarray:
    """S* a = sum_j a_j e_j, zero-padded to the given sequence length."""
    a = as_float_array(a, "coefficients", ndim=1)
    if a.shape[0] > length:
        raise TruncationError(f"{a.shape[0]} coefficients do not fit a length-{length} sequence")
    out = np.zeros(length)
    out[: a.shape[0]] = a
    return out


def gaussian_kernel(length_scale: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """K(t, s) = exp(-(t - s)^2 / (2 l^2)), broadcasting over arrays."""

    def kernel(t, s):
        diff = np.asarray(t, dtype=np.float64) - np.asarray(s, dtype=np.float64)
        return np.exp(-(diff ** 2) / (2.0 * length_scale ** 2))

    return kernel


@dataclass(frozen=True, eq=False)
class RkhsSampler:
    """Point evaluation at fixed locations in the RKHS of kernel."""

    kernel: Callable[[np.ndarray, np.ndarray], np.ndarray]
    locations: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "locations", as_float_array(self.locations, "locations", ndim=1))

    @property
    def m(self) -> int:
        return self.locations.shape[0]

    def gram(self) -> np.ndarray:
        t = self.locations
        return np.asarray(self.kernel(t[:, None], t[None, :]), dtype=np.float64)

    def validate(self) -> None:
        """
        Check that the Gram matrix is symmetric and PSD within -PSD_CLAMP.

        Raises:
            InvalidInputError: Gram matrix is not symmetric or not PSD.
        """
        es = sym_eigendecomp(as_sym_matrix(self.gram(), "kernel Gram matrix"))
        if es.dim and es.eigenvalues[-1] < -PSD_CLAMP:
            raise InvalidInputError(f"kernel Gram matrix is not PSD (min eigenvalue {es.eigenvalues[-1]:.3e})")


def rkhs_evaluate(s: RkhsSampler, coeffs, centers) -> np.ndarray:
    """
    Evaluate v = sum_i coeffs_i K(., centers_i) at the sampler locations.
    """
    coeffs = as_float_array(coeffs, "coeffs", ndim=1)
    centers = as_float_array(centers, "centers", ndim=1)
    if coeffs.shape != centers.shape:
        raise ShapeError(f"{coeffs.shape[0]} coefficients for {centers.shape[0]} centers")
    k = np.asarray(s.kernel(s.locations[:, None], centers[None, :]), dtype=np.float64)
    return k @ coeffs


def rkhs_adjoint(s: RkhsSampler, a) -> Tuple[np.ndarray, np.ndarray]:
    """S* a = sum_j a_j K(., t_j), returned as (coeffs, centers)."""
    a = as_float_array(a, "coefficients", ndim=1)
    if a.shape[0] != s.m:
        raise ShapeError(f"expected {s.m} coefficients, got {a.shape[0]}")
    return a.copy(), s.locations.copy()


def rkhs_nonlinearity(
    s: RkhsSampler, coeffs, centers, sigma: Callable[[np.ndarray], np.ndarray]
) -> Tuple[np.ndarray, np.ndarray]:
    """sigma(v) = S* sigma_*(S v) for a scalar Lipschitz sigma_*."""
    return rkhs_adjoint(s, sigma(rkhs_evaluate(s, coeffs, centers)))


def check_compression_identity(samples: Sequence[FunctionGrid], op: BinAverageOp) -> float:
    """
    Max-abs deviation between the covariance matrix of the discretized samples
    and the matrix of S C_n S*, built column by column from S C_n S* e_k.

    Raises:
        SampleSizeError: Fewer than two samples.
        ShapeError: Samples have different grid shapes.
    """
    from hvnet.covariance import SignalBatch, empirical_cov_matrix, empirical_cov_operator_apply

    if len(samples) < 2:
        raise SampleSizeError(f"need at least 2 samples, got {len(samples)}")
    shape = samples[0].shape
    if any(x.shape != shape for x in samples):
        raise ShapeError("samples must share one grid shape")
    if shape[0] != op.grid_size:
        op = BinAverageOp(p=op.p, d=op.d, grid_size=shape[0])

    columns = np.column_stack([bin_average_forward(op, x) for x in samples])
    direct = empirical_cov_matrix(SignalBatch(columns)).matrix

    compressed = np.empty((op.m, op.m))
    basis = np.eye(op.m)
    for k in range(op.m):
        image = empirical_cov_operator_apply(samples, bin_average_adjoint(op, basis[k]))
        compressed[:, k] = bin_average_forward(op, image)

    deviation = float(np.max(np.abs(direct - compressed)))
    logger.debug(f"Compression identity over {len(samples)} samples, m={op.m}: deviation {deviation:.3e}")
    return deviation
