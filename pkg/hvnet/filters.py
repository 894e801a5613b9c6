#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Covariance filters for HVNet

  - hvft / inverse_hvft: coordinates of a signal in the covariance eigenbasis.
  - spectral_filter_apply: sum_l h(lambda_l) <x, phi_l> phi_l + h(0) x_perp.
  - spatial_filter_apply: polynomial filter sum_j w_j C^j x.
  - eigenprojector / eigenspace_filter: the projector onto one eigenspace and the
    polynomial filter of degree <= q that reproduces it on the sample covariance.
  - filtered_scores: FPCA scores recovered from the filtered signal.
  - fpca_scores: the discrete FPCA transform used as a baseline.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from hvnet.covariance import CovMatrix, SignalBatch, empirical_cov_matrix
from hvnet.errors import InvalidInputError, InvalidTargetError, SampleSizeError, ShapeError
from hvnet.helpers import as_float_array
from hvnet.linalg import (
    PSD_CLAMP,
    EigenSystem,
    PolyCoeffs,
    fix_signs,
    group_ties,
    lagrange_poly_coeffs,
    matrix_poly_apply,
    sym_eigendecomp,
    tie_tolerance,
)

logger = logging.getLogger(__name__)

BOUNDED_CHECK_POINTS = 1000


@dataclass(frozen=True)
class SpectralResponse:
    """
    Frequency response h of a spectral filter.

    h_at_zero is the value applied to the kernel component x_perp; it defaults
    to h(0).
    """

    h: Callable[[np.ndarray], np.ndarray]
    h_at_zero: Optional[float] = None

    def at_zero(self) -> float:
        if self.h_at_zero is not None:
            return float(self.h_at_zero)
        return float(self(np.zeros(1))[0])

    def __call__(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=np.float64)
        return np.broadcast_to(np.asarray(self.h(lam), dtype=np.float64), lam.shape)

    def check_bounded(self, lambda_max: float, points: int = BOUNDED_CHECK_POINTS) -> None:
        """
        Raises:
            InvalidInputError: h is not finite at every sample of [0, lambda_max].
        """
        grid = np.linspace(0.0, max(float(lambda_max), 0.0), points)
        if not np.all(np.isfinite(self(grid))) or not np.isfinite(self.at_zero()):
            raise InvalidInputError(f"response is unbounded on [0, {lambda_max:.3e}]")


def polynomial_response(w) -> SpectralResponse:
    """Response h(lambda) = sum_k w_k lambda^k of a spatial filter."""
    poly = w if isinstance(w, PolyCoeffs) else PolyCoeffs(w)
    return SpectralResponse(h=poly, h_at_zero=float(poly.coeffs[0]))


def ideal_selector(values, tol: float = 0.0) -> SpectralResponse:
    """Indicator of the given eigenvalues (within tol); zero on the kernel."""
    targets = np.atleast_1d(np.asarray(values, dtype=np.float64))

    def h(lam):
        lam = np.asarray(lam, dtype=np.float64)
        hit = np.abs(lam[..., None] - targets) <= tol
        return np.any(hit, axis=-1).astype(np.float64)

    return SpectralResponse(h=h, h_at_zero=0.0)


@dataclass(frozen=True, eq=False)
class DistinctSpectrum:
    """Distinct positive eigenvalues (descending) and their index groups I(alpha)."""

    values: np.ndarray
    groups: Tuple[np.ndarray, ...]
    zero_cutoff: float

    @property
    def q(self) -> int:
        return int(self.values.shape[0])

    def index_of(self, alpha: float) -> int:
        """
        Position of alpha in values.

        Raises:
            InvalidTargetError: alpha is not a distinct eigenvalue.
        """
        if self.q == 0:
            raise InvalidTargetError("spectrum has no positive eigenvalues")
        tol = tie_tolerance(float(self.values[0]))
        hits = np.flatnonzero(np.abs(self.values - float(alpha)) <= tol)
        if hits.size == 0:
            raise InvalidTargetError(f"{alpha!r} is not an eigenvalue of the spectrum")
        return int(hits[0])

    def group(self, alpha: float) -> np.ndarray:
        return self.groups[self.index_of(alpha)]


def default_zero_cutoff(es: EigenSystem) -> float:
    return PSD_CLAMP * max(es.lambda_max, 0.0)


def distinct_spectrum(es: EigenSystem, zero_cutoff: Optional[float] = None) -> DistinctSpectrum:
    """
    Group the eigenvalues above zero_cutoff into distinct values.

    Eigenvalues within the tie tolerance share a group; each distinct value is
    the mean of its group.
    """
    cutoff = default_zero_cutoff(es) if zero_cutoff is None else float(zero_cutoff)
    positive = np.flatnonzero(es.eigenvalues > cutoff)
    if positive.size == 0:
        return DistinctSpectrum(values=np.zeros(0), groups=(), zero_cutoff=cutoff)
    vals = es.eigenvalues[positive]
    groups = tuple(positive[g] for g in group_ties(vals, tie_tolerance(es.lambda_max)))
    values = np.array([es.eigenvalues[g].mean() for g in groups])
    logger.debug(f"Distinct spectrum: {len(groups)} values from {positive.size} positive eigenvalues")
    return DistinctSpectrum(values=values, groups=groups, zero_cutoff=cutoff)


def _check_signal(es: EigenSystem, x, name: str = "signal") -> np.ndarray:
    x = as_float_array(x, name)
    if x.ndim not in (1, 2) or x.shape[0] != es.dim:
        raise ShapeError(f"{name} shape {x.shape} does not match eigensystem dimension {es.dim}")
    return x


def hvft(es: EigenSystem, x) -> np.ndarray:
    """x~[l] = <x, phi_l>; columns of a 2-D x are transformed independently."""
    return es.eigenvectors.T @ _check_signal(es, x)


def inverse_hvft(es: EigenSystem, coeffs) -> np.ndarray:
    """sum_l x~[l] phi_l."""
    return es.eigenvectors @ _check_signal(es, coeffs, "coefficients")


def spectral_filter_apply(
    es: EigenSystem, resp: SpectralResponse, x, zero_cutoff: Optional[float] = None
) -> np.ndarray:
    """
    sum_{lambda_l > cutoff} h(lambda_l) <x, phi_l> phi_l + h(0) x_perp.

    Eigenvalues at or below the cutoff are part of the kernel, and x_perp is
    what remains of x after removing its components above the cutoff.
    """
    x = _check_signal(es, x)
    cutoff = default_zero_cutoff(es) if zero_cutoff is None else float(zero_cutoff)
    keep = es.eigenvalues > cutoff
    phi = es.eigenvectors[:, keep]
    coords = phi.T @ x
    gains = resp(es.eigenvalues[keep])
    if x.ndim == 2:
        gains = gains[:, None]
    inside = phi @ coords
    return phi @ (gains * coords) + resp.at_zero() * (x - inside)


def spatial_filter_apply(c, w, x) -> np.ndarray:
    """h(C) x = sum_j w_j C^j x; x may be one signal or an m x n batch."""
    mat = c.matrix if isinstance(c, CovMatrix) else c
    if isinstance(x, SignalBatch):
        return matrix_poly_apply(mat, w, x.columns)
    return matrix_poly_apply(mat, w, x)


def eigenprojector(es: EigenSystem, spectrum: DistinctSpectrum, alpha: float) -> np.ndarray:
    """
    P_alpha = sum_{l in I(alpha)} phi_l phi_l^T.

    Raises:
        InvalidTargetError: alpha is not in the spectrum.
    """
    phi = es.eigenvectors[:, spectrum.group(alpha)]
    return phi @ phi.T


def kernel_projector(es: EigenSystem, spectrum: DistinctSpectrum) -> np.ndarray:
    """Projector onto the eigenvectors at or below the zero cutoff."""
    covered = np.concatenate(spectrum.groups) if spectrum.groups else np.zeros(0, dtype=np.intp)
    rest = np.setdiff1d(np.arange(es.dim), covered)
    phi = es.eigenvectors[:, rest]
    return phi @ phi.T


def eigenspace_filter(spectrum: DistinctSpectrum, alpha: float) -> PolyCoeffs:
    """
    Polynomial filter h_alpha of degree <= q with h_alpha(C) = P_alpha.

    Raises:
        InvalidTargetError: Empty spectrum or alpha not in it.
    """
    if spectrum.q == 0:
        raise InvalidTargetError("spectrum has no positive eigenvalues")
    idx = spectrum.index_of(alpha)
    return lagrange_poly_coeffs(spectrum.values, spectrum.values[idx])


def filtered_scores(spectrum: DistinctSpectrum, es: EigenSystem, alpha: float, x) -> np.ndarray:
    """<h_alpha(C) x, phi_l> for l in I(alpha), with C rebuilt from es."""
    x = _check_signal(es, x)
    filtered = spatial_filter_apply(es.reconstruct(), eigenspace_filter(spectrum, alpha), x)
    return es.eigenvectors[:, spectrum.group(alpha)].T @ filtered


def fpca_scores(batch: SignalBatch, num_scores: int) -> np.ndarray:
    """
    First num_scores discrete FPCA scores of each sample (O x n).

    The batch is centered and projected on the top eigenvectors of its
    covariance. When n < m the n x n Gram matrix is decomposed instead; it has
    the same nonzero spectrum and yields the same scores.

    Raises:
        InvalidInputError: num_scores outside 1..m.
        SampleSizeError: Fewer than two samples.
    """
    if num_scores < 1 or num_scores > batch.m:
        raise InvalidInputError(f"num_scores must be in 1..{batch.m}, got {num_scores}")
    if batch.n < 2:
        raise SampleSizeError(f"need at least 2 samples, got {batch.n}")
    x = batch.centered().columns
    scores = np.zeros((num_scores, batch.n))

    if batch.n < batch.m:
        gram = sym_eigendecomp((x.T @ x) / batch.n, psd=True)
        cutoff = default_zero_cutoff(gram)
        keep = min(num_scores, int(np.sum(gram.eigenvalues > cutoff)))
        if keep:
            sigma = np.sqrt(batch.n * gram.eigenvalues[:keep])
            v = gram.eigenvectors[:, :keep]
            u = fix_signs((x @ v) / sigma)
            scores[:keep] = u.T @ x
    else:
        es = sym_eigendecomp(empirical_cov_matrix(batch).matrix, psd=True)
        cutoff = default_zero_cutoff(es)
        keep = min(num_scores, int(np.sum(es.eigenvalues > cutoff)))
        scores[:num_scores] = es.eigenvectors[:, :num_scores].T @ x
        scores[keep:] = 0.0

    if keep < num_scores:
        logger.warning(f"Covariance rank {keep} is below the {num_scores} requested FPCA scores; padding with zeros")
    return scores
