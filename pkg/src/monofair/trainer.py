"""Minibatch ADAM training with validation-based model selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, TextIO

import numpy as np

from .data import Dataset
from .errors import DataError, NetworkError, TrainingError
from .loss import LossConfig, LossVariant, loss_components, loss_gradient_wrt_predictions
from .network import NetworkConfig, NetworkParams, forward_backward, forward_batch, init_params

log = logging.getLogger(__name__)

IMPROVEMENT_THRESHOLD = 1e-6


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 256
    max_epochs: int = 2000
    patience: int = 50
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("ADAM betas must lie in (0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if self.batch_size < 2:
            raise ValueError("batch_size must be at least 2")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be positive")


# ---------------------------------------------------------------- ADAM


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros(cls, params: NetworkParams) -> "AdamState":
        return cls([np.zeros_like(x) for x in params.arrays()], [np.zeros_like(x) for x in params.arrays()], 0)


def adam_step(
    params: NetworkParams,
    grad: NetworkParams,
    state: AdamState,
    lr: float = 1e-3,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> tuple[NetworkParams, AdamState]:
    """One bias-corrected ADAM update; inputs are left untouched."""
    b1, b2 = betas
    g_arrays = grad.arrays()
    p_arrays = params.arrays()
    if [g.shape for g in g_arrays] != [p.shape for p in p_arrays]:
        raise TrainingError("gradient shapes do not match parameters")
    if not grad.all_finite():
        raise TrainingError("non-finite gradient")
    t = state.t + 1
    m = [b1 * mi + (1 - b1) * g for mi, g in zip(state.m, g_arrays)]
    v = [b2 * vi + (1 - b2) * g * g for vi, g in zip(state.v, g_arrays)]
    c1, c2 = 1 - b1**t, 1 - b2**t
    new = [p - lr * (mi / c1) / (np.sqrt(vi / c2) + eps) for p, mi, vi in zip(p_arrays, m, v)]
    n = len(params.weights)
    return NetworkParams(new[:n], new[n:]), AdamState(m, v, t)


# ---------------------------------------------------------------- batching


def stratified_batches(a, batch_size: int, seed: int, epoch: int = 0) -> list[np.ndarray]:
    """Partition row indices into batches that each hold both protected classes.

    Each class is permuted separately and cut into as many near-equal chunks
    as there are batches. The larger chunks of class 0 go to the first
    batches and those of class 1 to the last, which keeps every batch within
    one individual of the global class proportions.
    """
    a = np.asarray(a)
    n = a.size
    n_batches = max(1, -(-n // batch_size))
    rng = np.random.default_rng([seed, epoch])
    idx0 = rng.permutation(np.flatnonzero(a == 0))
    idx1 = rng.permutation(np.flatnonzero(a == 1))
    for c, idx in ((0, idx0), (1, idx1)):
        if idx.size < n_batches:
            raise DataError(
                f"protected class {c} has {idx.size} members, fewer than the {n_batches} batches"
            )
    chunks0 = np.array_split(idx0, n_batches)
    chunks1 = np.array_split(idx1, n_batches)[::-1]
    batches = [rng.permutation(np.concatenate([c0, c1])) for c0, c1 in zip(chunks0, chunks1)]
    order = rng.permutation(n_batches)
    return [batches[i] for i in order]


def random_batches(n: int, batch_size: int, seed: int, epoch: int = 0) -> list[np.ndarray]:
    n_batches = max(1, -(-n // batch_size))
    perm = np.random.default_rng([seed, epoch]).permutation(n)
    return np.array_split(perm, n_batches)


# ---------------------------------------------------------------- training


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_fairness: float
    val_prediction: float


@dataclass
class TrainResult:
    best_params: NetworkParams
    history: list[EpochRecord]
    epochs_run: int
    stopped_early: bool
    best_epoch: int = 0
    final_params: NetworkParams | None = None

    @property
    def best_val_loss(self) -> float:
        return self.history[self.best_epoch - 1].val_loss if self.history else float("nan")


@dataclass
class _Split:
    X: np.ndarray
    target: np.ndarray
    a: np.ndarray | None


def _target_for(data: Dataset, cfg: LossConfig) -> np.ndarray:
    if cfg.variant is LossVariant.FIG1:
        if data.score is None:
            raise DataError("score-maximisation loss needs a dataset with continuous scores")
        return data.score
    return data.y


def train(
    train_data: Dataset,
    val_data: Dataset,
    net_cfg: NetworkConfig,
    loss_cfg: LossConfig,
    train_cfg: TrainConfig = TrainConfig(),
    log_stream: TextIO | None = None,
    init: NetworkParams | None = None,
    epoch_callback: Callable[[int, NetworkParams], None] | None = None,
) -> TrainResult:
    """Train one network on ``train_data`` and select the best epoch on ``val_data``.

    Features must already be scaled. Batches are stratified by the protected
    attribute so the parity term is defined on every batch.
    """
    if train_data.schema.names != val_data.schema.names:
        raise DataError("train and validation schemas differ")
    if val_data.n == 0:
        raise DataError("empty validation set")
    tr = _Split(train_data.X, _target_for(train_data, loss_cfg), train_data.a)
    va = _Split(val_data.X, _target_for(val_data, loss_cfg), val_data.a)
    return _fit(tr, va, net_cfg, loss_cfg, train_cfg, log_stream, init, epoch_callback)


def fit_regression(
    X,
    f,
    net_cfg: NetworkConfig,
    train_cfg: TrainConfig = TrainConfig(),
    X_val=None,
    f_val=None,
    init: NetworkParams | None = None,
) -> TrainResult:
    """MSE fit without a protected attribute; validates on the training set if no val set given."""
    X, f = np.asarray(X, dtype=float), np.asarray(f, dtype=float)
    tr = _Split(X, f, None)
    va = tr if X_val is None else _Split(np.asarray(X_val, dtype=float), np.asarray(f_val, dtype=float), None)
    return _fit(tr, va, net_cfg, LossConfig(variant=LossVariant.MSE), train_cfg, None, init, None)


def _fit(tr, va, net_cfg, loss_cfg, train_cfg, log_stream, init, epoch_callback) -> TrainResult:
    rng = np.random.default_rng([train_cfg.seed, 0x5EED])
    params = init.copy() if init is not None else init_params(net_cfg, rng)
    state = AdamState.zeros(params)
    betas = (train_cfg.adam_beta1, train_cfg.adam_beta2)
    n = tr.X.shape[0]

    best_params, best_val, best_epoch = params.copy(), np.inf, 0
    reference, wait = np.inf, 0
    history: list[EpochRecord] = []
    stopped_early = False

    for epoch in range(1, train_cfg.max_epochs + 1):
        if tr.a is None:
            batches = random_batches(n, train_cfg.batch_size, train_cfg.seed, epoch)
        else:
            batches = stratified_batches(tr.a, train_cfg.batch_size, train_cfg.seed, epoch)
        total = 0.0
        for b, idx in enumerate(batches):
            Xb, tb = tr.X[idx], tr.target[idx]
            ab = None if tr.a is None else tr.a[idx]
            try:
                values = []

                def upstream(p):
                    values.append(loss_components(loss_cfg, p, tb, ab)[0])
                    if not np.isfinite(values[0]):
                        raise TrainingError("non-finite loss")
                    return loss_gradient_wrt_predictions(loss_cfg, p, tb, ab)

                _, grad = forward_backward(params, net_cfg, Xb, upstream)
                value = values[0]
                params, state = adam_step(params, grad, state, train_cfg.learning_rate, betas, train_cfg.adam_eps)
            except (NetworkError, TrainingError) as exc:
                raise TrainingError(f"epoch {epoch}, batch {b}: {exc}") from exc
            total += value * idx.size
        if not params.all_finite():
            raise TrainingError(f"non-finite parameters after epoch {epoch}")

        try:
            p_val = forward_batch(params, net_cfg, va.X)
        except NetworkError as exc:
            raise TrainingError(f"epoch {epoch}, validation: {exc}") from exc
        val_loss, val_f, val_p = loss_components(loss_cfg, p_val, va.target, va.a)
        if not np.isfinite(val_loss):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}")
        rec = EpochRecord(epoch, total / n, val_loss, val_f, val_p)
        history.append(rec)
        if log_stream is not None:
            log_stream.write(f"{epoch}\t{rec.train_loss!r}\t{val_loss!r}\t{val_f!r}\t{val_p!r}\n")
        if epoch_callback is not None:
            epoch_callback(epoch, params)

        if val_loss < best_val:
            best_val, best_params, best_epoch = val_loss, params.copy(), epoch
        if val_loss < reference - IMPROVEMENT_THRESHOLD:
            reference, wait = val_loss, 0
        else:
            wait += 1
            if wait >= train_cfg.patience:
                stopped_early = True
                break

    log.debug("trained %d epochs, best epoch %d (val %.6g)", len(history), best_epoch, best_val)
    return TrainResult(
        best_params=best_params,
        history=history,
        epochs_run=len(history),
        stopped_early=stopped_early,
        best_epoch=best_epoch,
        final_params=params,
    )
