#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Discrete Hilbert coVariance Network

A layer maps X_t (m x F_t) to sigma(sum_j C^j X_t W_{t,j}) with C a normalized
covariance matrix. The last layer is mean-pooled over the m components and
fed to an MLP head producing class logits. Setting J = 1 and C = I gives the
MLP baseline, which never mixes the m components.

Batches are stacked along a leading axis: features (B, m, F_0) and shifts
either (B, m, m) (one covariance per bag), (m, m) (one shared covariance) or
None (identity). The FPCA baseline uses ScoreClassifierConfig instead: its
features are (B, S, O) score rows, each row goes through the head and the
per-row logits are averaged over S.

Gradients are computed by hand in reverse mode; parameters, gradients and
optimizer moments are dicts of named arrays:
  layer{t}.tap{j}   F_t x F_{t+1}
  head{k}.weight    in x out
  head{k}.bias      out
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import special

from hvnet.errors import ConfigError, DatasetError, InvalidInputError, ShapeError

logger = logging.getLogger(__name__)

NONLINEARITIES = ("gelu", "identity")
WIDTH_MATCH_RTOL = 0.05

Params = Dict[str, np.ndarray]


@dataclass(frozen=True)
class HVNConfig:
    """widths = (F_0, ..., F_T); taps = J."""

    widths: Tuple[int, ...]
    taps: int = 2
    nonlinearity: str = "gelu"
    head_hidden: Tuple[int, ...] = (64,)
    num_classes: int = 2

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "head_hidden", tuple(int(w) for w in self.head_hidden))
        if len(self.widths) < 2:
            raise ConfigError("an HVN needs at least one layer (two widths)")
        if any(w < 1 for w in self.widths + self.head_hidden):
            raise ConfigError(f"widths must be positive: {self.widths}, head {self.head_hidden}")
        if self.taps < 0:
            raise ConfigError(f"taps must be nonnegative, got {self.taps}")
        if self.nonlinearity not in NONLINEARITIES:
            raise ConfigError(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.num_classes < 2:
            raise ConfigError("need at least two classes")

    @property
    def layers(self) -> int:
        return len(self.widths) - 1

    @property
    def head_input(self) -> int:
        return self.widths[-1]

    def num_params(self) -> int:
        """sum_t (J+1) F_t F_{t+1} plus the head parameters."""
        taps = sum((self.taps + 1) * a * b for a, b in zip(self.widths[:-1], self.widths[1:]))
        return taps + head_param_count(self.head_input, self.head_hidden, self.num_classes)


@dataclass(frozen=True)
class ScoreClassifierConfig:
    """Head-only classifier over per-sample score vectors (FPCA baseline)."""

    num_scores: int
    head_hidden: Tuple[int, ...] = (64,)
    num_classes: int = 2
    nonlinearity: str = "gelu"

    def __post_init__(self):
        object.__setattr__(self, "head_hidden", tuple(int(w) for w in self.head_hidden))
        if self.num_scores < 1 or any(w < 1 for w in self.head_hidden):
            raise ConfigError(f"sizes must be positive: {self}")
        if self.num_classes < 2:
            raise ConfigError("need at least two classes")

    @property
    def head_input(self) -> int:
        return self.num_scores

    def num_params(self) -> int:
        return head_param_count(self.num_scores, self.head_hidden, self.num_classes)


ModelConfig = Union[HVNConfig, ScoreClassifierConfig]


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    log_every: int = 20

    def __post_init__(self):
        if self.lr < 0:
            raise ConfigError(f"learning rate must be nonnegative, got {self.lr}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be at least 1")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0) or self.eps <= 0:
            raise ConfigError("ADAM betas must lie in [0, 1) and eps must be positive")


@dataclass(frozen=True, eq=False)
class HVNParams:
    tensors: Params

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def names(self) -> List[str]:
        return sorted(self.tensors)

    def count(self) -> int:
        return int(sum(t.size for t in self.tensors.values()))

    def copy(self) -> "HVNParams":
        return HVNParams({k: v.copy() for k, v in self.tensors.items()})


@dataclass(frozen=True, eq=False)
class LabeledSet:
    """Features, integer labels and the shift operator(s) they are filtered with."""

    features: np.ndarray
    labels: np.ndarray
    shifts: Optional[np.ndarray] = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.shape[0] != self.features.shape[0]:
            raise ShapeError(f"{labels.shape} labels for {self.features.shape[0]} examples")
        if self.shifts is not None and self.shifts.ndim == 3 and self.shifts.shape[0] != labels.shape[0]:
            raise ShapeError("per-example shifts must match the number of examples")
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, idx: np.ndarray) -> "LabeledSet":
        shifts = self.shifts
        if shifts is not None and shifts.ndim == 3:
            shifts = shifts[idx]
        return LabeledSet(self.features[idx], self.labels[idx], shifts)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    train_acc: float
    eval_acc: Optional[float] = None


@dataclass
class AdamState:
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)
    t: int = 0


def head_param_count(in_dim: int, hidden: Tuple[int, ...], num_classes: int) -> int:
    sizes = (in_dim,) + tuple(hidden) + (num_classes,)
    return int(sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:])))


# Nonlinearities and losses


def gelu(x):
    """x * Phi(x) with the exact Gaussian CDF."""
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * x * (1.0 + special.erf(x / np.sqrt(2.0)))


def gelu_grad(x):
    x = np.asarray(x, dtype=np.float64)
    cdf = 0.5 * (1.0 + special.erf(x / np.sqrt(2.0)))
    pdf = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
    return cdf + x * pdf


def _activate(kind: str, z: np.ndarray) -> np.ndarray:
    return gelu(z) if kind == "gelu" else z


def _activate_grad(kind: str, z: np.ndarray) -> np.ndarray:
    return gelu_grad(z) if kind == "gelu" else np.ones_like(z)


def mean_pool(x) -> np.ndarray:
    """Mean over the component axis (second to last) of (..., m, F)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim < 2 or x.shape[-2] < 1:
        raise ShapeError(f"cannot pool an array of shape {x.shape}")
    return x.mean(axis=-2)


def cross_entropy(logits, label: int) -> float:
    """-log softmax(logits)[label]."""
    logits = np.asarray(logits, dtype=np.float64)
    if not 0 <= int(label) < logits.shape[-1]:
        raise InvalidInputError(f"label {label} out of range for {logits.shape[-1]} classes")
    return float(special.logsumexp(logits) - logits[int(label)])


def mean_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    if np.any(labels < 0) or np.any(labels >= logits.shape[-1]):
        raise InvalidInputError(f"labels out of range for {logits.shape[-1]} classes")
    lse = special.logsumexp(logits, axis=-1)
    return float(np.mean(lse - logits[np.arange(labels.shape[0]), labels]))


# Parameters


def init_params(config: ModelConfig, rng: np.random.Generator) -> HVNParams:
    """
    Taps W_{t,j} ~ U(+-sqrt(6 / ((J+1)(F_t + F_{t+1})))); head weights are
    Glorot-uniform with zero biases.
    """
    tensors: Params = {}
    if isinstance(config, HVNConfig):
        for t, (f_in, f_out) in enumerate(zip(config.widths[:-1], config.widths[1:])):
            bound = np.sqrt(6.0 / ((config.taps + 1) * (f_in + f_out)))
            for j in range(config.taps + 1):
                tensors[f"layer{t}.tap{j}"] = rng.uniform(-bound, bound, size=(f_in, f_out))
    sizes = (config.head_input,) + config.head_hidden + (config.num_classes,)
    for k, (f_in, f_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        bound = np.sqrt(6.0 / (f_in + f_out))
        tensors[f"head{k}.weight"] = rng.uniform(-bound, bound, size=(f_in, f_out))
        tensors[f"head{k}.bias"] = np.zeros(f_out)
    return HVNParams(tensors)


def _check_params(config: ModelConfig, params: HVNParams) -> None:
    expected = init_params(config, np.random.default_rng(0))
    if params.names() != expected.names():
        raise ShapeError(f"parameter names {params.names()} do not match the configuration")
    for name in expected.names():
        if params[name].shape != expected[name].shape:
            raise ShapeError(f"{name} has shape {params[name].shape}, expected {expected[name].shape}")


def save_params(path: str, params: HVNParams) -> None:
    """Write named float64 tensors to an .npz archive."""
    np.savez(path, **{k: np.asarray(v, dtype="<f8") for k, v in params.tensors.items()})
    logger.debug(f"Saved {len(params.tensors)} tensors to {path}")


def load_params(path: str) -> HVNParams:
    with np.load(path, allow_pickle=False) as archive:
        return HVNParams({k: np.asarray(archive[k], dtype=np.float64) for k in archive.files})


# Forward


def _shift(shifts: Optional[np.ndarray], x: np.ndarray) -> np.ndarray:
    """C X for (B, m, F) features with (B, m, m), (m, m) or identity shifts."""
    if shifts is None:
        return x
    return np.matmul(shifts, x)


def hvn_layer_forward(c, x, weights, nonlinearity: str = "gelu") -> np.ndarray:
    """
    sigma(sum_j C^j X W_j) for one layer, by iterated multiplication with C.

    c may be None for the identity; x is (m, F_t) or (B, m, F_t).
    """
    z, _ = _layer_preactivation(c, np.asarray(x, dtype=np.float64), weights)
    return _activate(nonlinearity, z)


def _layer_preactivation(shifts, x: np.ndarray, weights) -> Tuple[np.ndarray, List[np.ndarray]]:
    if x.shape[-1] != weights[0].shape[0]:
        raise ShapeError(f"features of width {x.shape[-1]} do not match tap shape {weights[0].shape}")
    if shifts is not None and shifts.shape[-1] != x.shape[-2]:
        raise ShapeError(f"shift of shape {shifts.shape} does not match {x.shape[-2]} components")
    powers = [x]
    for _ in range(1, len(weights)):
        powers.append(_shift(shifts, powers[-1]))
    z = sum(p @ w for p, w in zip(powers, weights))
    return z, powers


def head_forward(pooled, params: HVNParams, nonlinearity: str = "gelu") -> np.ndarray:
    """affine -> GELU -> ... -> affine; works on any leading dimensions."""
    logits, _ = _head_forward(np.asarray(pooled, dtype=np.float64), params, nonlinearity)
    return logits


def _head_layers(params: HVNParams) -> int:
    return sum(1 for name in params.tensors if name.startswith("head") and name.endswith(".weight"))


def _head_forward(a: np.ndarray, params: HVNParams, nonlinearity: str):
    count = _head_layers(params)
    if a.shape[-1] != params["head0.weight"].shape[0]:
        raise ShapeError(f"head expects {params['head0.weight'].shape[0]} inputs, got {a.shape[-1]}")
    inputs, pre = [], []
    for k in range(count):
        inputs.append(a)
        z = a @ params[f"head{k}.weight"] + params[f"head{k}.bias"]
        pre.append(z)
        a = _activate(nonlinearity, z) if k < count - 1 else z
    return a, (inputs, pre)


def _hvn_forward(config: HVNConfig, params: HVNParams, shifts, features: np.ndarray):
    if features.ndim != 3 or features.shape[-1] != config.widths[0]:
        raise ShapeError(f"features must be (B, m, {config.widths[0]}), got {features.shape}")
    x = features
    cache = []
    for t in range(config.layers):
        weights = [params[f"layer{t}.tap{j}"] for j in range(config.taps + 1)]
        z, powers = _layer_preactivation(shifts, x, weights)
        cache.append((z, powers))
        x = _activate(config.nonlinearity, z)
    return x, cache


def forward(config: ModelConfig, params: HVNParams, shifts, features) -> np.ndarray:
    """Class logits (B, K) for a batch."""
    features = np.asarray(features, dtype=np.float64)
    if isinstance(config, ScoreClassifierConfig):
        return head_forward(features, params, config.nonlinearity).mean(axis=1)
    x, _ = _hvn_forward(config, params, shifts, features)
    return head_forward(mean_pool(x), params, config.nonlinearity)


def predict(config: ModelConfig, params: HVNParams, data: LabeledSet, batch_size: int = 256) -> np.ndarray:
    out = []
    for start in range(0, len(data), batch_size):
        chunk = data.subset(np.arange(start, min(start + batch_size, len(data))))
        out.append(np.argmax(forward(config, params, chunk.shifts, chunk.features), axis=-1))
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def accuracy(config: ModelConfig, params: HVNParams, data: LabeledSet) -> float:
    if len(data) == 0:
        raise DatasetError("cannot score an empty dataset")
    return float(np.mean(predict(config, params, data) == data.labels))


# Backward


def _head_backward(d_out: np.ndarray, params: HVNParams, cache, nonlinearity: str, grads: Params) -> np.ndarray:
    inputs, pre = cache
    d = d_out
    for k in reversed(range(len(inputs))):
        a = inputs[k].reshape(-1, inputs[k].shape[-1])
        d2 = d.reshape(-1, d.shape[-1])
        grads[f"head{k}.weight"] = a.T @ d2
        grads[f"head{k}.bias"] = d2.sum(axis=0)
        d = d @ params[f"head{k}.weight"].T
        if k > 0:
            d = d * _activate_grad(nonlinearity, pre[k - 1])
    return d


def backward(
    config: ModelConfig, params: HVNParams, shifts, features, labels
) -> Tuple[float, Params]:
    """
    Mean cross-entropy over the batch and its exact gradient for every tensor.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    grads: Params = {}
    batch = features.shape[0]

    if isinstance(config, ScoreClassifierConfig):
        rows, head_cache = _head_forward(features, params, config.nonlinearity)
        logits = rows.mean(axis=1)
    else:
        x_last, layer_cache = _hvn_forward(config, params, shifts, features)
        logits, head_cache = _head_forward(mean_pool(x_last), params, config.nonlinearity)

    loss = mean_cross_entropy(logits, labels)
    d_logits = special.softmax(logits, axis=-1)
    d_logits[np.arange(batch), labels] -= 1.0
    d_logits /= batch

    if isinstance(config, ScoreClassifierConfig):
        samples = features.shape[1]
        d_rows = np.repeat(d_logits[:, None, :], samples, axis=1) / samples
        _head_backward(d_rows, params, head_cache, config.nonlinearity, grads)
        return loss, grads

    d_pooled = _head_backward(d_logits, params, head_cache, config.nonlinearity, grads)
    m = x_last.shape[-2]
    d_x = np.repeat(d_pooled[:, None, :], m, axis=1) / m
    for t in reversed(range(config.layers)):
        z, powers = layer_cache[t]
        d_z = d_x * _activate_grad(config.nonlinearity, z)
        d_powers = []
        for j in range(config.taps + 1):
            w = params[f"layer{t}.tap{j}"]
            grads[f"layer{t}.tap{j}"] = np.einsum("bif,big->fg", powers[j], d_z)
            d_powers.append(d_z @ w.T)
        if t > 0:
            # C is symmetric, so the adjoint of C^j is C^j.
            d_x = d_powers[-1]
            for d_p in reversed(d_powers[:-1]):
                d_x = _shift(shifts, d_x) + d_p
    return loss, grads


# Optimizer


def adam_step(params: HVNParams, grads: Params, state: AdamState, config: TrainConfig) -> Tuple[HVNParams, AdamState]:
    """One bias-corrected ADAM update; returns new params and state."""
    t = state.t + 1
    bc1 = 1.0 - config.beta1 ** t
    bc2 = 1.0 - config.beta2 ** t
    new_m, new_v, new_p = {}, {}, {}
    for name, value in params.tensors.items():
        g = grads[name]
        m = config.beta1 * state.m.get(name, np.zeros_like(value)) + (1.0 - config.beta1) * g
        v = config.beta2 * state.v.get(name, np.zeros_like(value)) + (1.0 - config.beta2) * (g * g)
        new_m[name], new_v[name] = m, v
        new_p[name] = value - config.lr * (m / bc1) / (np.sqrt(v / bc2) + config.eps)
    return HVNParams(new_p), AdamState(m=new_m, v=new_v, t=t)


# Training


def _evaluate(config: ModelConfig, params: HVNParams, data: LabeledSet, batch_size: int) -> Tuple[float, float]:
    total, correct = 0.0, 0
    for start in range(0, len(data), batch_size):
        chunk = data.subset(np.arange(start, min(start + batch_size, len(data))))
        logits = forward(config, params, chunk.shifts, chunk.features)
        total += mean_cross_entropy(logits, chunk.labels) * len(chunk)
        correct += int(np.sum(np.argmax(logits, axis=-1) == chunk.labels))
    return total / len(data), correct / len(data)


def train(
    config: ModelConfig,
    train_config: TrainConfig,
    train_set: LabeledSet,
    eval_set: Optional[LabeledSet] = None,
    params: Optional[HVNParams] = None,
) -> Tuple[HVNParams, List[EpochRecord]]:
    """
    Minibatch ADAM on mean cross-entropy.

    History starts with an epoch-0 record for the initial parameters; each
    later record holds the full training-set loss after that epoch.

    Raises:
        DatasetError: Empty training or evaluation set.
    """
    if len(train_set) == 0:
        raise DatasetError("training set is empty")
    if eval_set is not None and len(eval_set) == 0:
        raise DatasetError("evaluation set is empty")
    rng = np.random.default_rng(train_config.seed)
    if params is None:
        params = init_params(config, rng)
    else:
        _check_params(config, params)
    state = AdamState()
    eval_bs = max(train_config.batch_size, 256)

    def record(epoch: int) -> EpochRecord:
        loss, acc = _evaluate(config, params, train_set, eval_bs)
        eval_acc = _evaluate(config, params, eval_set, eval_bs)[1] if eval_set is not None else None
        return EpochRecord(epoch=epoch, loss=loss, train_acc=acc, eval_acc=eval_acc)

    history = [record(0)]
    logger.info(f"Training {type(config).__name__} ({config.num_params()} params) on {len(train_set)} examples")
    for epoch in range(1, train_config.epochs + 1):
        order = rng.permutation(len(train_set))
        for start in range(0, len(order), train_config.batch_size):
            chunk = train_set.subset(order[start : start + train_config.batch_size])
            batch_loss, grads = backward(config, params, chunk.shifts, chunk.features, chunk.labels)
            params, state = adam_step(params, grads, state, train_config)
            logger.debug(f"epoch {epoch} step {state.t}: batch loss {batch_loss:.6f}")
        history.append(record(epoch))
        if epoch % train_config.log_every == 0 or epoch == train_config.epochs:
            rec = history[-1]
            logger.info(f"Epoch {epoch}/{train_config.epochs}: loss {rec.loss:.4f}, train acc {rec.train_acc:.3f}")
    return params, history


def match_mlp_width(hvn: HVNConfig, rtol: float = WIDTH_MATCH_RTOL) -> HVNConfig:
    """
    MLP baseline (J = 1, used with C = I) with the HVN's depth, hidden width
    chosen by bisection so its parameter count is within rtol of the HVN's.

    Raises:
        ConfigError: No integer width lands within rtol.
    """
    target = hvn.num_params()

    def mlp(width: int) -> HVNConfig:
        widths = (hvn.widths[0],) + (width,) * hvn.layers
        return replace(hvn, widths=widths, taps=1)

    lo, hi = 1, 1
    while mlp(hi).num_params() < target:
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mlp(mid).num_params() < target:
            lo = mid
        else:
            hi = mid
    best = min((mlp(lo), mlp(hi)), key=lambda c: abs(c.num_params() / target - 1.0))
    ratio = best.num_params() / target
    if abs(ratio - 1.0) > rtol:
        raise ConfigError(f"no MLP width matches {target} parameters within {rtol:.0%} (best ratio {ratio:.3f})")
    logger.debug(f"MLP width {best.widths[1]}: {best.num_params()} params vs HVN {target}")
    return best
