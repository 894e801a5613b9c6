"""
Experiment configuration.

Settings live in JSON files parsed into frozen dataclasses. Precedence is
dataclass defaults < config file < explicit command-line flags, and the
effective configuration is written next to the results.
"""

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from hvnet.datagen import SyntheticTaskConfig
from hvnet.errors import ConfigError, HVNError
from hvnet.network import TrainConfig

logger = logging.getLogger(__name__)

MODEL_KINDS = ("hvn", "mlp", "fpca")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture shared by the three models of a sweep point."""

    layers: int = 2
    width: int = 32
    taps: int = 2
    nonlinearity: str = "gelu"
    head_hidden: Tuple[int, ...] = (64,)
    fpca_scores: int = 16

    def __post_init__(self):
        if self.layers < 1 or self.width < 1 or self.taps < 0 or self.fpca_scores < 1:
            raise ConfigError(f"invalid model settings: {self}")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    out: str = "results"
    repeats: int = 1
    workers: int = 1
    record_timing: bool = False
    models: Tuple[str, ...] = MODEL_KINDS
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    synthetic: SyntheticTaskConfig = field(default_factory=SyntheticTaskConfig)
    n_grid: Tuple[int, ...] = (8, 16, 24, 48, 96)
    snr_grid: Tuple[float, ...] = (-10.0, 0.0, 10.0, 20.0, 30.0)
    ecg_m_grid: Tuple[int, ...] = (20, 35, 70, 140)
    ecg_train: Optional[str] = None
    ecg_test: Optional[str] = None

    def __post_init__(self):
        if self.repeats < 1 or self.workers < 1:
            raise ConfigError("repeats and workers must be at least 1")
        unknown = [m for m in self.models if m not in MODEL_KINDS]
        if not self.models or unknown:
            raise ConfigError(f"models must be a nonempty subset of {MODEL_KINDS}, got {self.models}")
        if not self.n_grid or not self.snr_grid or not self.ecg_m_grid:
            raise ConfigError("sweep grids must be nonempty")


_NESTED = {"model": ModelConfig, "train": TrainConfig, "synthetic": SyntheticTaskConfig}


def _build(cls, data: Dict[str, Any], where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a JSON object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if cls is ExperimentConfig and key in _NESTED:
            value = _build(_NESTED[key], value, f"{where}.{key}")
        elif isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, HVNError) as e:
        raise ConfigError(f"invalid {where}: {e}") from e


def config_from_dict(data: Dict[str, Any]) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "config")


def config_to_dict(cfg: ExperimentConfig) -> Dict[str, Any]:
    return dataclasses.asdict(cfg)


def load_config(path: Optional[str] = None) -> ExperimentConfig:
    """
    Read a JSON config file; None gives the defaults.

    Raises:
        ConfigError: Unreadable JSON, unknown keys or invalid values.
    """
    if path is None:
        return ExperimentConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        logger.error(f"Config file not found: {path}")
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        logger.error(f"Config file {path} is not valid JSON: {e}")
        raise ConfigError(f"{path}: invalid JSON: {e}") from e
    logger.debug(f"Loaded config from {path}")
    return config_from_dict(data)


def apply_overrides(cfg: ExperimentConfig, **flags) -> ExperimentConfig:
    """
    Apply command-line flags that were given (None means not given).

    "epochs" goes to the training settings; everything else is top level.
    """
    given = {k: v for k, v in flags.items() if v is not None}
    epochs = given.pop("epochs", None)
    try:
        if epochs is not None:
            cfg = dataclasses.replace(cfg, train=dataclasses.replace(cfg.train, epochs=epochs))
        return dataclasses.replace(cfg, **given)
    except (TypeError, HVNError) as e:
        raise ConfigError(f"invalid command-line override: {e}") from e


def write_config(cfg: ExperimentConfig, path: str) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True), encoding="utf-8")
    logger.info(f"Effective configuration written to {path}")
