"""Prediction and fairness losses with their gradients w.r.t. predictions.

All functions take a batch of predictions ``p`` and return batch means, so
duplicating every row leaves values unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DataError

CE_CLAMP = 1e-7


class LossVariant(str, Enum):
    EXPERIMENT = "experiment"  # alpha * parity + (1 - alpha) * cross-entropy
    FIG1 = "fig1"  # score maximisation with acceptance budget
    MSE = "mse"  # plain regression, used by the surface fits


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 0.0
    variant: LossVariant = LossVariant.EXPERIMENT
    fig1_budget: float = 0.285
    fig1_budget_weight: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "variant", LossVariant(self.variant))
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 < self.fig1_budget < 1.0:
            raise ValueError(f"budget must lie in (0, 1), got {self.fig1_budget}")
        if not self.fig1_budget_weight > 0:
            raise ValueError("budget weight must be positive")


def _check_pair(p, other, name):
    p = np.asarray(p, dtype=float)
    other = np.asarray(other)
    if p.ndim != 1 or p.shape != other.shape:
        raise DataError(f"predictions {p.shape} and {name} {other.shape} must be equal-length vectors")
    if p.size == 0:
        raise DataError("empty batch")
    return p, other


def cross_entropy(p, y) -> float:
    p, y = _check_pair(p, y, "labels")
    if np.any((p <= 0) | (p >= 1)):
        raise DataError("cross-entropy needs predictions strictly inside (0, 1)")
    q = np.clip(p, CE_CLAMP, 1 - CE_CLAMP)
    return float(np.mean(-(y * np.log(q) + (1 - y) * np.log(1 - q))))


def cross_entropy_grad(p, y) -> np.ndarray:
    p, y = _check_pair(p, y, "labels")
    q = np.clip(p, CE_CLAMP, 1 - CE_CLAMP)
    return (q - y) / (q * (1 - q)) / p.size


def _class_masks(a):
    a = np.asarray(a)
    m1, m0 = a == 1, a == 0
    if not m1.any() or not m0.any():
        raise DataError("both protected classes must be present in the batch")
    return m1, m0


def parity_gap(p, a) -> float:
    """Signed difference of class means, mean(p | a=1) - mean(p | a=0)."""
    p, a = _check_pair(p, a, "protected attribute")
    m1, m0 = _class_masks(a)
    return float(p[m1].mean() - p[m0].mean())


def demographic_parity(p, a) -> float:
    return abs(parity_gap(p, a))


def demographic_parity_grad(p, a) -> np.ndarray:
    """Subgradient of `demographic_parity`; zero exactly at parity."""
    p, a = _check_pair(p, a, "protected attribute")
    m1, m0 = _class_masks(a)
    sign = np.sign(p[m1].mean() - p[m0].mean())
    g = np.zeros_like(p)
    g[m1] = sign / m1.sum()
    g[m0] = -sign / m0.sum()
    return g


def compound_loss(p, y, a, cfg: LossConfig) -> float:
    fair = demographic_parity(p, a)
    pred = cross_entropy(p, y)
    if cfg.alpha == 0.0:
        return pred
    if cfg.alpha == 1.0:
        return fair
    return cfg.alpha * fair + (1 - cfg.alpha) * pred


def fig1_objective(p, s, a, cfg: LossConfig) -> float:
    """-(1 - alpha) * mean(p * s) + weight * (mean(p) - budget)^2 + alpha * parity.

    The budget penalty stands in for a hard constraint, so it is not
    discounted by alpha.
    """
    p, s = _check_pair(p, s, "scores")
    value = -(1 - cfg.alpha) * np.mean(p * s) + cfg.fig1_budget_weight * (p.mean() - cfg.fig1_budget) ** 2
    if cfg.alpha:
        value += cfg.alpha * demographic_parity(p, a)
    return float(value)


def fig1_objective_grad(p, s, a, cfg: LossConfig) -> np.ndarray:
    p, s = _check_pair(p, s, "scores")
    n = p.size
    g = -(1 - cfg.alpha) * s / n + 2 * cfg.fig1_budget_weight * (p.mean() - cfg.fig1_budget) / n
    if cfg.alpha:
        g = g + cfg.alpha * demographic_parity_grad(p, a)
    return g


def mse(p, f) -> float:
    p, f = _check_pair(p, f, "targets")
    return float(np.mean((p - f) ** 2))


def mse_grad(p, f) -> np.ndarray:
    p, f = _check_pair(p, f, "targets")
    return 2 * (p - f) / p.size


def loss_components(cfg: LossConfig, p, target, a=None) -> tuple[float, float, float]:
    """Return ``(total, fairness part, prediction part)`` for ``cfg.variant``.

    ``target`` is the binary label (experiment loss), the continuous score
    (fig1) or the regression target (mse). The fairness part is the raw
    parity gap, unweighted; it is nan when ``a`` is None.
    """
    if cfg.variant is LossVariant.MSE:
        pred = mse(p, target)
        return pred, float("nan"), pred
    fair = demographic_parity(p, a)
    if cfg.variant is LossVariant.EXPERIMENT:
        return compound_loss(p, target, a, cfg), fair, cross_entropy(p, target)
    total = fig1_objective(p, target, a, cfg)
    return total, fair, total - cfg.alpha * fair


def loss_gradient_wrt_predictions(cfg: LossConfig, p, target, a=None) -> np.ndarray:
    if cfg.variant is LossVariant.MSE:
        return mse_grad(p, target)
    if cfg.variant is LossVariant.FIG1:
        return fig1_objective_grad(p, target, a, cfg)
    g = np.zeros(len(p))
    if cfg.alpha < 1.0:
        g += (1 - cfg.alpha) * cross_entropy_grad(p, target)
    if cfg.alpha > 0.0:
        g += cfg.alpha * demographic_parity_grad(p, a)
    return g
