"""
Model construction and input preparation for the HVN, MLP and FPCA runs.

  hvn   covariance-polynomial layers on the bag's (or dataset's) normalized covariance
  mlp   the same network with J = 1 and C = I, width-matched to the HVN
  fpca  FPCA score vectors through the MLP head, logits averaged per bag
"""

import logging
from typing import Sequence, Tuple

import numpy as np

from hvnet.covariance import CovMatrix, SignalBatch
from hvnet.datagen import Bag, bags_to_features
from hvnet.errors import ConfigError
from hvnet.filters import fpca_scores
from hvnet.linalg import sym_eigendecomp
from hvnet.network import HVNConfig, LabeledSet, ModelConfig, ScoreClassifierConfig, match_mlp_width

from experiments.config import ModelConfig as ModelSettings

logger = logging.getLogger(__name__)


def hvn_config(settings: ModelSettings, input_width: int, num_classes: int) -> HVNConfig:
    return HVNConfig(
        widths=(input_width,) + (settings.width,) * settings.layers,
        taps=settings.taps,
        nonlinearity=settings.nonlinearity,
        head_hidden=settings.head_hidden,
        num_classes=num_classes,
    )


def build_model(kind: str, settings: ModelSettings, input_width: int, num_classes: int) -> ModelConfig:
    """Network configuration for one model kind."""
    if kind == "hvn":
        return hvn_config(settings, input_width, num_classes)
    if kind == "mlp":
        return match_mlp_width(hvn_config(settings, input_width, num_classes))
    if kind == "fpca":
        return ScoreClassifierConfig(
            num_scores=settings.fpca_scores,
            head_hidden=settings.head_hidden,
            num_classes=num_classes,
            nonlinearity=settings.nonlinearity,
        )
    raise ConfigError(f"unknown model kind {kind!r}")


def standardized_bag_scores(batch: SignalBatch, num_scores: int) -> np.ndarray:
    """
    n x O FPCA scores of one bag, each component scaled to unit variance over
    the bag's samples. Components missing from a rank-deficient bag stay zero.
    """
    scores = fpca_scores(batch, num_scores).T
    std = scores.std(axis=0)
    return scores / np.where(std > 0.0, std, 1.0)


def bag_set(kind: str, bags: Sequence[Bag], settings: ModelSettings) -> LabeledSet:
    """
    Inputs for the bag task: each bag's n samples are the F_0 = n input
    signals, filtered with the bag's own covariance (hvn) or the identity (mlp);
    fpca sees one row of per-bag standardized scores per sample.
    """
    features, shifts, labels = bags_to_features(bags)
    if kind == "hvn":
        return LabeledSet(features, labels, shifts)
    if kind == "mlp":
        return LabeledSet(features, labels, None)
    if kind == "fpca":
        scores = np.stack([standardized_bag_scores(b.signals, settings.fpca_scores) for b in bags])
        return LabeledSet(scores, labels, None)
    raise ConfigError(f"unknown model kind {kind!r}")


def global_fpca_basis(train: np.ndarray, num_scores: int) -> Tuple[np.ndarray, np.ndarray]:
    """Training mean and the top eigenvectors (m x O) of the training covariance."""
    mean = train.mean(axis=0)
    centered = train - mean
    es = sym_eigendecomp(centered.T @ centered / train.shape[0], psd=True)
    return mean, es.eigenvectors[:, :num_scores]


def series_set(
    kind: str,
    series: np.ndarray,
    labels: np.ndarray,
    cov: CovMatrix,
    basis: Tuple[np.ndarray, np.ndarray],
) -> LabeledSet:
    """
    Inputs for single-series classification (N x m discretized series) with
    one covariance shared by every series.
    """
    if kind == "hvn":
        return LabeledSet(series[:, :, None], labels, cov.matrix)
    if kind == "mlp":
        return LabeledSet(series[:, :, None], labels, None)
    if kind == "fpca":
        mean, vecs = basis
        return LabeledSet(((series - mean) @ vecs)[:, None, :], labels, None)
    raise ConfigError(f"unknown model kind {kind!r}")
