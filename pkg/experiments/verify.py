"""
Randomized checks of the exact identities the library relies on.

Each family reports its instance count and the largest residual seen:

  projector     ||h_alpha(C) - P_alpha||_F for every distinct eigenvalue
  resolution    ||sum_alpha h_alpha(C) + P_ker - I||_F
  scores        filtered vs raw eigenspace scores
  pointwise     HVFT(h(C) x) vs h(lambda) HVFT(x) for random polynomial filters
  compression   covariance of discretized samples vs S C_n S*
  vandermonde   Lagrange coefficients plugged into their Vandermonde system

The first three families evaluate a Lagrange product whose float64 rounding
grows with the spectrum's spread and clustering. Each of their instances is
therefore allowed the first-order error bound of projector_allowance on top of
the tolerance; the raw largest residual is still reported.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List

import numpy as np

from hvnet.covariance import SignalBatch, empirical_cov_matrix, normalize_cov
from hvnet.discretize import BinAverageOp, FunctionGrid, check_compression_identity
from hvnet.filters import (
    DistinctSpectrum,
    distinct_spectrum,
    eigenprojector,
    eigenspace_filter,
    filtered_scores,
    hvft,
    kernel_projector,
    polynomial_response,
    spatial_filter_apply,
)
from hvnet.linalg import (
    EigenSystem,
    PolyCoeffs,
    factored_rounding_gain,
    lagrange_poly_coeffs,
    lagrange_vandermonde,
    sym_eigendecomp,
)

logger = logging.getLogger(__name__)

TOLERANCES = {
    "projector": 1e-7,
    "resolution": 1e-7,
    "scores": 1e-8,
    "pointwise": 1e-9,
    "compression": 1e-10,
    "vandermonde": 1e-8,
}

EPS = float(np.finfo(np.float64).eps)


@dataclass
class FamilyResult:
    """
    Largest residual of one identity family.

    An instance may carry an allowance: the rounding error float64 evaluation
    is expected to produce on it. It passes when residual <= tolerance + allowance.
    """

    name: str
    tolerance: float
    instances: int = 0
    max_residual: float = 0.0
    max_allowance: float = 0.0
    max_excess: float = 0.0
    ill_conditioned: int = 0

    @property
    def passed(self) -> bool:
        return self.max_excess <= self.tolerance

    def add(self, residual: float, allowance: float = 0.0) -> None:
        residual, allowance = float(residual), float(allowance)
        self.instances += 1
        self.max_residual = max(self.max_residual, residual)
        self.max_allowance = max(self.max_allowance, allowance)
        self.max_excess = max(self.max_excess, residual - allowance)
        if residual > self.tolerance:
            self.ill_conditioned += 1
            logger.debug(f"{self.name}: residual {residual:.3e} above tolerance, rounding allowance {allowance:.3e}")


@dataclass
class VerifyReport:
    seed: int
    families: Dict[str, FamilyResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(f.passed for f in self.families.values())

    def lines(self) -> List[str]:
        out = []
        for f in self.families.values():
            status = "PASS" if f.passed else "FAIL"
            line = f"{status} {f.name:<12} instances={f.instances:<4} max_residual={f.max_residual:.3e}"
            line += f" tol={f.tolerance:.0e}"
            if f.ill_conditioned:
                line += f" ill_conditioned={f.ill_conditioned} max_allowance={f.max_allowance:.3e}"
            out.append(line)
        return out

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "passed": self.passed,
            "families": [dict(asdict(f), passed=f.passed) for f in self.families.values()],
        }

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)


def repeated_eigenvalue_cov(rng: np.random.Generator) -> np.ndarray:
    """Covariance with spectrum (3, 2, 2, 1, 0, 0) in a random orthonormal basis."""
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    c = (q * np.array([3.0, 2.0, 2.0, 1.0, 0.0, 0.0])) @ q.T
    return 0.5 * (c + c.T)


def random_cov(rng: np.random.Generator, max_dim: int = 12, max_samples: int = 10) -> np.ndarray:
    m = int(rng.integers(2, max_dim + 1))
    n = int(rng.integers(2, max_samples + 1))
    return empirical_cov_matrix(SignalBatch(rng.standard_normal((m, n)))).matrix




def max_divided_difference(poly: PolyCoeffs, lam: np.ndarray) -> float:
    """Largest |h[lam_i, lam_j]| over the spectrum, with h' for (nearly) equal pairs."""
    h = np.asarray(poly(lam))
    dh = np.asarray(poly.derivative(lam))
    diff = lam[:, None] - lam[None, :]
    close = np.abs(diff) <= np.sqrt(EPS) * max(1.0, float(np.max(np.abs(lam))))
    dd = np.where(close, 0.5 * (dh[:, None] + dh[None, :]), (h[:, None] - h[None, :]) / np.where(close, 1.0, diff))
    return float(np.max(np.abs(dd)))


@dataclass(frozen=True)
class ProjectorAllowance:
    """Rounding error float64 is expected to leave in h_alpha(C) and in the filtered scores."""

    matrix: float
    scores: float


def projector_allowance(c: np.ndarray, es: EigenSystem, spectrum: DistinctSpectrum, alpha: float) -> ProjectorAllowance:
    """
    Expected float64 error of the eigenspace filter on this instance.

    Sums three terms: rounding while applying the factors (factored_rounding_gain);
    the miss of h_alpha at the computed eigenvalues; and the drift between C and
    the matrix whose eigenvectors define P_alpha, scaled by the largest divided
    difference of h_alpha. The scores allowance is per unit ||x||.
    """
    dim = es.dim
    lam = es.eigenvalues
    poly = eigenspace_filter(spectrum, alpha)
    c_norm = float(np.linalg.norm(c))
    inside = np.zeros(dim)
    inside[spectrum.group(alpha)] = 1.0
    miss = float(np.linalg.norm(np.asarray(poly(lam)) - inside))
    phi = es.eigenvectors
    orth = float(np.linalg.norm(phi.T @ phi - np.eye(dim))) + dim * EPS
    recompose = float(np.linalg.norm(c - es.reconstruct())) + (dim + 2) * EPS * c_norm
    slope = max_divided_difference(poly, lam)
    apply = (dim + 3) * EPS * factored_rounding_gain(poly, lam, c_norm)
    drift = slope * (recompose + orth * c_norm)
    return ProjectorAllowance(
        matrix=np.sqrt(dim) * apply + drift + miss + orth,
        scores=apply + slope * (orth + (dim + 2) * EPS) * c_norm + miss + 2.0 * orth,
    )


def check_projectors(c: np.ndarray, rng: np.random.Generator, report: VerifyReport) -> None:
    es = sym_eigendecomp(c, psd=True)
    spectrum = distinct_spectrum(es)
    eye = np.eye(es.dim)
    total = kernel_projector(es, spectrum)
    total_allowance = float(np.linalg.norm(es.eigenvectors.T @ es.eigenvectors - eye)) + es.dim * EPS
    worst_proj, worst_score = (0.0, 0.0), (0.0, 0.0)
    for alpha in spectrum.values:
        allowance = projector_allowance(c, es, spectrum, alpha)
        h = spatial_filter_apply(c, eigenspace_filter(spectrum, alpha), eye)
        residual = float(np.linalg.norm(h - eigenprojector(es, spectrum, alpha)))
        worst_proj = max(worst_proj, (residual, allowance.matrix), key=lambda p: p[0] - p[1])
        total = total + h
        total_allowance += allowance.matrix
        x = rng.standard_normal(es.dim)
        raw = es.eigenvectors[:, spectrum.group(alpha)].T @ x
        score_residual = float(np.max(np.abs(filtered_scores(spectrum, es, alpha, x) - raw)))
        worst_score = max(
            worst_score, (score_residual, allowance.scores * float(np.linalg.norm(x))), key=lambda p: p[0] - p[1]
        )
    report.families["projector"].add(*worst_proj)
    report.families["resolution"].add(float(np.linalg.norm(total - eye)), total_allowance)
    report.families["scores"].add(*worst_score)


def check_pointwise(rng: np.random.Generator, report: VerifyReport) -> None:
    c = normalize_cov(empirical_cov_matrix(SignalBatch(rng.standard_normal((int(rng.integers(2, 13)), 10))))).matrix
    es = sym_eigendecomp(c, psd=True)
    w = rng.standard_normal(int(rng.integers(1, 5)))
    x = rng.standard_normal(es.dim)
    out = hvft(es, spatial_filter_apply(c, w, x))
    expected = polynomial_response(w)(es.eigenvalues) * hvft(es, x)
    report.families["pointwise"].add(float(np.max(np.abs(out - expected))))


def check_compression(rng: np.random.Generator, report: VerifyReport, grid_size: int = 512, bins: int = 32) -> None:
    d = int(rng.choice([1, 2, 4]))
    n = int(rng.integers(2, 11))
    samples = [FunctionGrid(rng.standard_normal((grid_size, d))) for _ in range(n)]
    report.families["compression"].add(check_compression_identity(samples, BinAverageOp(bins, d, grid_size)))


def check_vandermonde(rng: np.random.Generator, report: VerifyReport) -> None:
    while True:
        nodes = np.sort(rng.uniform(0.1, 1.0, size=int(rng.integers(1, 7))))
        if nodes.size == 1 or np.min(np.diff(nodes)) >= 0.05:
            break
    target = float(rng.choice(nodes))
    v, rhs = lagrange_vandermonde(nodes, target)
    w = lagrange_poly_coeffs(nodes, target).coeffs
    report.families["vandermonde"].add(float(np.max(np.abs(v @ w - rhs))))


def run_verify(seed: int = 0, instances: int = 100, compression_instances: int = 50) -> VerifyReport:
    """Run every family; the first projector instance has a repeated eigenvalue."""
    rng = np.random.default_rng(seed)
    report = VerifyReport(seed=seed, families={k: FamilyResult(k, tol) for k, tol in TOLERANCES.items()})

    check_projectors(repeated_eigenvalue_cov(rng), rng, report)
    for _ in range(instances):
        check_projectors(random_cov(rng), rng, report)

    checks: List[Callable] = [check_pointwise, check_vandermonde]
    for check in checks:
        for _ in range(instances):
            check(rng, report)
    for _ in range(compression_instances):
        check_compression(rng, report)

    for line in report.lines():
        logger.info(line)
    return report
