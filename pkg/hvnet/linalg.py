#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Dense symmetric linear algebra for HVNet

This module provides the primitives every other module builds on:
  - Validation of symmetric matrices.
  - Eigendecomposition by cyclic Jacobi rotations (descending eigenvalues,
    deterministic eigenvector signs).
  - Cholesky factorization of PSD matrices with diagonal jitter.
  - Horner-style or factored application of a matrix polynomial sum_j w_j C^j
    to a signal, with a first-order bound on its rounding error.
  - Coefficients of the scaled Lagrange polynomial used to build eigenspace
    projectors, and the Vandermonde system that characterizes them.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import linalg as sla

from hvnet.errors import (
    DegeneracyError,
    InvalidInputError,
    InvalidTargetError,
    NotPSDError,
    ShapeError,
)
from hvnet.helpers import as_float_array

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
PSD_CLAMP = 1e-10
TIE_RTOL = 1e-8
NODE_RTOL = 1e-10
SIGN_TOL = 1e-10

# Off-diagonal entries below this fraction of ||a||_F are not rotated.
_ROTATION_FLOOR = 1e-18


def as_sym_matrix(a, name: str = "matrix") -> np.ndarray:
    """
    Validate a real symmetric matrix and return it as a float64 array.

    Raises:
        ShapeError: If the input is not square.
        InvalidInputError: If it has non-finite entries or is not symmetric
            within SYMMETRY_TOL (scaled by max(1, max|a|)).
    """
    arr = as_float_array(a, name, ndim=2)
    if arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {arr.shape}")
    if arr.size:
        asym = np.max(np.abs(arr - arr.T))
        if asym > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(arr)))):
            raise InvalidInputError(f"{name} is not symmetric (max asymmetry {asym:.3e})")
    return arr


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenvalues sorted descending, eigenvectors as aligned columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.shape[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0]) if self.dim else 0.0

    def reconstruct(self) -> np.ndarray:
        """Return Q diag(lambda) Q^T."""
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T


@dataclass(frozen=True, eq=False)
class PolyCoeffs:
    """
    Coefficients w_0..w_J of sum_k w_k t^k (index k holds w_k).

    factors, when present, is the same polynomial as an ordered product of
    (t - root) / denom terms; matrix_poly_apply then applies the factors one
    after another instead of running Horner on the monomial coefficients.
    """

    coeffs: np.ndarray
    factors: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        arr = as_float_array(self.coeffs, "coeffs", ndim=1)
        if arr.shape[0] < 1:
            raise InvalidInputError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", arr)
        if self.factors is not None and len(self.factors) != arr.shape[0] - 1:
            raise InvalidInputError("factor count must equal the polynomial degree")

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    def __call__(self, t):
        """Evaluate the scalar polynomial at t (scalar or array), factor by factor when factored."""
        if self.factors is None:
            return npoly.polyval(t, self.coeffs)
        t = np.asarray(t, dtype=np.float64)
        out = np.ones_like(t)
        for root, denom in self.factors:
            out = out * (t - root) / denom
        return out

    def derivative(self, t):
        """h'(t); for a factored polynomial, sum_k (1 / denom_k) prod_{j != k} (t - root_j) / denom_j."""
        if self.factors is None:
            return npoly.polyval(t, npoly.polyder(self.coeffs))
        t = np.asarray(t, dtype=np.float64)
        terms = [(t - root) / denom for root, denom in self.factors]
        out = np.zeros_like(t)
        for k, (_, denom) in enumerate(self.factors):
            rest = np.ones_like(t)
            for j, term in enumerate(terms):
                if j != k:
                    rest = rest * term
            out = out + rest / denom
        return out

    @classmethod
    def from_factors(cls, factors: Sequence[Tuple[float, float]]) -> "PolyCoeffs":
        """Expand prod_k (t - root_k) / denom_k into monomial coefficients."""
        coeffs = np.array([1.0])
        for root, denom in factors:
            coeffs = npoly.polymul(coeffs, [-root, 1.0]) / denom
        return cls(coeffs, factors=tuple((float(r), float(d)) for r, d in factors))


@lru_cache(maxsize=64)
def _round_robin_schedule(n: int) -> Tuple[Tuple[np.ndarray, np.ndarray], ...]:
    """
    Circle-method tournament: n-1 (or n for odd n) rounds of disjoint (p, q)
    pairs, covering every unordered pair exactly once per sweep.
    """
    players = list(range(n))
    if n % 2:
        players.append(-1)
    k = len(players)
    rounds = []
    for _ in range(k - 1):
        pairs = [(players[i], players[k - 1 - i]) for i in range(k // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a >= 0 and b >= 0]
        p = np.array([a for a, _ in pairs], dtype=np.intp)
        q = np.array([b for _, b in pairs], dtype=np.intp)
        rounds.append((p, q))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _jacobi_round(work: np.ndarray, vecs: np.ndarray, p: np.ndarray, q: np.ndarray, floor: float) -> None:
    """Apply one round of simultaneous rotations on disjoint pairs, in place."""
    apq = work[p, q]
    active = np.abs(apq) > floor
    if not np.any(active):
        return
    p, q, apq = p[active], q[active], apq[active]
    app = work[p, p]
    aqq = work[q, q]
    theta = (aqq - app) / (2.0 * apq)
    t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c

    cols_p = work[:, p]
    cols_q = work[:, q]
    work[:, p] = cols_p * c - cols_q * s
    work[:, q] = cols_p * s + cols_q * c

    rows_p = work[p, :]
    rows_q = work[q, :]
    work[p, :] = c[:, None] * rows_p - s[:, None] * rows_q
    work[q, :] = s[:, None] * rows_p + c[:, None] * rows_q
    work[p, q] = 0.0
    work[q, p] = 0.0

    vp = vecs[:, p]
    vq = vecs[:, q]
    vecs[:, p] = vp * c - vq * s
    vecs[:, q] = vp * s + vq * c


def fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Make the first component above SIGN_TOL of every column positive."""
    if vecs.size == 0:
        return vecs
    mask = np.abs(vecs) > SIGN_TOL
    first = mask.argmax(axis=0)
    signs = np.sign(vecs[first, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def sym_eigendecomp(
    a,
    psd: bool = False,
    tol: float = JACOBI_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> EigenSystem:
    """
    Eigendecomposition of a real symmetric matrix by cyclic Jacobi sweeps.

    Pairs are visited in a fixed round-robin order; each round rotates a set of
    disjoint pairs at once. Sweeps stop when the off-diagonal Frobenius norm is
    at most tol * ||a||_F or after max_sweeps.

    Args:
        a: Symmetric matrix.
        psd: If True, eigenvalues in [-PSD_CLAMP * max(1, lambda_1), 0) are
            clamped to zero.
        tol: Relative off-diagonal convergence threshold.
        max_sweeps: Sweep limit.

    Returns:
        EigenSystem with descending eigenvalues and sign-normalized eigenvectors.

    Raises:
        InvalidInputError: Non-finite or non-symmetric input.
    """
    work = as_sym_matrix(a).copy()
    n = work.shape[0]
    work = 0.5 * (work + work.T)
    vecs = np.eye(n)
    scale = float(np.linalg.norm(work))

    sweeps = 0
    if n > 1 and scale > 0.0:
        schedule = _round_robin_schedule(n)
        floor = _ROTATION_FLOOR * scale
        while _off_diagonal_norm(work) > tol * scale:
            if sweeps >= max_sweeps:
                logger.warning(
                    f"Jacobi did not converge in {max_sweeps} sweeps "
                    f"(off-diagonal {_off_diagonal_norm(work) / scale:.3e} relative)"
                )
                break
            sweeps += 1
            for p, q in schedule:
                _jacobi_round(work, vecs, p, q, floor)
    logger.debug(f"Jacobi eigendecomposition of {n}x{n} matrix took {sweeps} sweeps")

    values = np.diag(work).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vecs = fix_signs(vecs[:, order])

    if psd and n:
        clamp = PSD_CLAMP * max(1.0, float(values[0]))
        below = values < -clamp
        if np.any(below):
            logger.warning(f"{int(below.sum())} eigenvalues below -{clamp:.1e} in a PSD input")
        values[(values < 0.0) & ~below] = 0.0
    return EigenSystem(eigenvalues=values, eigenvectors=vecs)


def cholesky_psd(a, jitter: float = 0.0) -> np.ndarray:
    """
    Lower Cholesky factor L with L L^T = a + jitter * I.

    Raises:
        InvalidInputError: Negative jitter or invalid matrix.
        NotPSDError: A pivot is non-positive after adding the jitter.
    """
    arr = as_sym_matrix(a)
    if jitter < 0:
        raise InvalidInputError(f"jitter must be nonnegative, got {jitter}")
    shifted = arr + jitter * np.eye(arr.shape[0])
    try:
        return sla.cholesky(shifted, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPSDError(f"matrix is not PSD after jitter {jitter:.1e}: {exc}") from exc


def matrix_poly_apply(c, w: Union[PolyCoeffs, Sequence[float]], x) -> np.ndarray:
    """
    Compute sum_j w_j C^j x by iterated multiplication, without forming any C^j.

    Plain coefficients run through Horner's scheme. A PolyCoeffs carrying
    factors applies y <- (C y - root * y) / denom once per factor instead.

    Args:
        c: Square matrix (dim x dim).
        w: Polynomial coefficients, w[k] multiplies C^k.
        x: Signal of shape (dim,) or (dim, F).

    Raises:
        ShapeError: If dimensions disagree.
    """
    poly = w if isinstance(w, PolyCoeffs) else PolyCoeffs(np.asarray(w, dtype=np.float64))
    c = np.asarray(c, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ShapeError(f"shift operator must be square, got shape {c.shape}")
    if x.ndim not in (1, 2) or x.shape[0] != c.shape[0]:
        raise ShapeError(f"signal shape {x.shape} does not match operator dimension {c.shape[0]}")
    if poly.factors is not None:
        y = x
        for root, denom in poly.factors:
            y = (c @ y - root * y) / denom
        return y
    coeffs = poly.coeffs
    y = coeffs[-1] * x
    for wk in coeffs[-2::-1]:
        y = c @ y + wk * x
    return y


def factored_rounding_gain(poly: PolyCoeffs, eigenvalues, c_norm: float) -> float:
    """
    First-order rounding gain G of applying poly's factors to a symmetric C.

    With y_k = (C y_{k-1} - root_k y_{k-1}) / denom_k, stage k rounds with an
    error of at most (dim + 3) eps (||C||_F + |root_k|) / |denom_k| ||y_{k-1}||,
    and the later stages scale it by their largest response over the
    spectrum. Summed over stages:

        ||fl(h(C) x) - h(C) x|| <= (dim + 3) * eps * G * ||x||

    Raises:
        InvalidInputError: poly carries no factors.
    """
    if poly.factors is None:
        raise InvalidInputError("rounding gain needs a factored polynomial")
    lam = as_float_array(eigenvalues, "eigenvalues", ndim=1)
    stages = [(lam - root) / denom for root, denom in poly.factors]
    prefix = [np.ones_like(lam)]
    for s in stages:
        prefix.append(prefix[-1] * s)
    suffix = [np.ones_like(lam)]
    for s in reversed(stages):
        suffix.append(suffix[-1] * s)
    suffix.reverse()
    gain = 0.0
    for j, (root, denom) in enumerate(poly.factors):
        before = float(np.max(np.abs(prefix[j]))) if lam.size else 1.0
        after = float(np.max(np.abs(suffix[j + 1]))) if lam.size else 1.0
        gain += (float(c_norm) + abs(root)) / abs(denom) * before * after
    return gain


def _check_nodes(nodes) -> np.ndarray:
    lam = as_float_array(nodes, "nodes", ndim=1)
    if lam.size == 0:
        raise DegeneracyError("node set is empty")
    if np.any(lam <= 0.0):
        raise DegeneracyError("nodes must be strictly positive (0 is reserved for the kernel)")
    ordered = np.sort(lam)
    gaps = np.diff(ordered)
    if np.any(gaps <= NODE_RTOL * ordered[1:]):
        raise DegeneracyError("nodes are not pairwise distinct")
    return lam


def _match_node(lam: np.ndarray, target: float) -> int:
    hits = np.flatnonzero(np.abs(lam - target) <= NODE_RTOL * np.maximum(np.abs(lam), abs(target)))
    if hits.size == 0:
        raise InvalidTargetError(f"target {target!r} is not one of the nodes")
    return int(hits[0])


def lagrange_poly_coeffs(nodes, target: float) -> PolyCoeffs:
    """
    Scaled Lagrange polynomial on nodes U {0} that is 1 at target.

    L(t) = (t / alpha) * prod_{beta != alpha} (t - beta) / (alpha - beta),
    expanded factor by factor, so L(alpha) = 1, L(beta) = 0, L(0) = 0 and
    deg L = len(nodes).

    Raises:
        DegeneracyError: Duplicate or non-positive nodes.
        InvalidTargetError: target is not a node.
    """
    lam = _check_nodes(nodes)
    idx = _match_node(lam, float(target))
    alpha = lam[idx]
    others = np.delete(lam, idx)
    # Applied in order of distance from alpha.
    others = others[np.argsort(np.abs(others - alpha), kind="stable")]
    factors = [(0.0, alpha)] + [(beta, alpha - beta) for beta in others]
    return PolyCoeffs.from_factors(factors)


def lagrange_vandermonde(nodes, target: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vandermonde system V w = b whose unique solution is the scaled Lagrange
    polynomial: rows are the points {0} U nodes, b is 1 at target, 0 elsewhere.
    """
    lam = _check_nodes(nodes)
    idx = _match_node(lam, float(target))
    points = np.concatenate(([0.0], lam))
    v = np.vander(points, N=lam.size + 1, increasing=True)
    rhs = np.zeros(lam.size + 1)
    rhs[idx + 1] = 1.0
    return v, rhs


def tie_tolerance(lambda_max: float) -> float:
    """Two eigenvalues are equal when they differ by at most this amount."""
    return TIE_RTOL * max(1.0, float(lambda_max))


def group_ties(values: np.ndarray, tol: float) -> List[np.ndarray]:
    """
    Group indices of descending values into runs of equal values.

    A new group starts when a value is more than tol below its group's first value.
    """
    groups: List[List[int]] = []
    start = None
    for i, v in enumerate(values):
        if start is None or start - v > tol:
            groups.append([i])
            start = v
        else:
            groups[-1].append(i)
    return [np.array(g, dtype=np.intp) for g in groups]
