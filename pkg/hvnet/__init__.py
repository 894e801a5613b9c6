"""
HVNet Package

Modules:
  - linalg: Jacobi eigendecomposition, Cholesky, matrix polynomials, Lagrange filters.
  - discretize: Fine-grid signals and discretization operators with their adjoints.
  - covariance: Empirical covariance matrices and operators, normalization.
  - filters: HVFT, spectral and spatial covariance filters, eigenspace projectors, FPCA.
  - network: The discrete HVN, its gradients and the ADAM training loop.
  - datagen: Gaussian-process bags, AWGN and UCR time-series ingestion.
  - helpers: Logging setup, seed derivation, path utilities.
  - errors: Exception hierarchy.
"""

from .covariance import *
from .datagen import *
from .discretize import *
from .errors import *
from .filters import *
from .helpers import *
from .linalg import *
from .network import *
