"""Evaluation metrics: accuracy, discrimination, resentment, Lipschitz estimate, odds ratio."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .data import MonotonicityTag, ScalingParams
from .errors import DataError

DEFAULT_THRESHOLD = 0.5

# Upper bound on elements of the boolean pair blocks built by the O(N^2) scans.
_BLOCK_ELEMENTS = 4_000_000


def hard_predictions(p, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    return (np.asarray(p, dtype=float) >= threshold).astype(np.int64)


def accuracy(y_hat, y) -> float:
    y_hat, y = np.asarray(y_hat), np.asarray(y)
    if y_hat.size == 0:
        raise DataError("accuracy of an empty sample is undefined")
    if y_hat.shape != y.shape:
        raise DataError("prediction and label lengths differ")
    return float(1.0 - np.mean(np.abs(y - y_hat)))


def _class_rates(values, a) -> tuple[float, float]:
    values, a = np.asarray(values, dtype=float), np.asarray(a)
    if values.shape != a.shape:
        raise DataError("value and protected-attribute lengths differ")
    m1, m0 = a == 1, a == 0
    if not m1.any() or not m0.any():
        raise DataError("both protected classes must be present")
    return float(values[m1].mean()), float(values[m0].mean())


def discrimination(y_hat, a) -> float:
    """Absolute gap in positive-prediction rates between the two classes."""
    r1, r0 = _class_rates(y_hat, a)
    return abs(r1 - r0)


def _tag_signs(tags: Sequence[MonotonicityTag]) -> np.ndarray:
    return np.array([MonotonicityTag(t).sign for t in tags], dtype=int)


def better_than(x_i, x_j, tags: Sequence[MonotonicityTag]) -> bool:
    """Componentwise dominance of ``x_i`` over ``x_j``.

    Unconstrained coordinates must be equal, monotone coordinates weakly
    better, and at least one monotone coordinate strictly better.
    """
    x_i, x_j = np.asarray(x_i, dtype=float), np.asarray(x_j, dtype=float)
    signs = _tag_signs(tags)
    if x_i.shape != x_j.shape or x_i.shape != signs.shape:
        raise DataError("dimension mismatch in better_than")
    free = signs == 0
    if np.any(x_i[free] != x_j[free]):
        return False
    diff = (x_i - x_j)[~free] * signs[~free]
    return bool(np.all(diff >= 0) and np.any(diff > 0))


def _blocks(n: int, per_row: int):
    step = max(1, _BLOCK_ELEMENTS // max(1, per_row))
    for lo in range(0, n, step):
        yield lo, min(n, lo + step)


def resentment(p, X, a, tags: Sequence[MonotonicityTag]) -> float:
    """Fraction of individuals who see a peer they dominate (or an equal
    peer of the other class) receive a strictly higher soft prediction."""
    p = np.asarray(p, dtype=float)
    X = np.asarray(X, dtype=float)
    a = np.asarray(a)
    n = p.size
    if X.shape[0] != n or a.shape != (n,):
        raise DataError("resentment inputs have inconsistent lengths")
    if n == 0:
        raise DataError("resentment of an empty sample is undefined")
    signs = _tag_signs(tags)
    if X.shape[1] != signs.size:
        raise DataError("tag count differs from feature count")
    free = signs == 0
    mono = ~free
    Xs = X[:, mono] * signs[mono]  # oriented so larger is better
    Xf = X[:, free]
    resentful = np.zeros(n, dtype=bool)
    for lo, hi in _blocks(n, n * max(1, X.shape[1])):
        higher = p[None, :] > p[lo:hi, None]
        same_free = np.all(Xf[lo:hi, None, :] == Xf[None, :, :], axis=2)
        diff = Xs[lo:hi, None, :] - Xs[None, :, :]
        weakly = np.all(diff >= 0, axis=2)
        strictly = np.any(diff > 0, axis=2)
        equal = weakly & ~strictly
        cross = a[lo:hi, None] != a[None, :]
        neighbour = same_free & ((weakly & strictly) | (equal & cross))
        resentful[lo:hi] = np.any(neighbour & higher, axis=1)
    return float(resentful.mean())


def lipschitz_estimate(p, X, scaling: ScalingParams | None = None) -> float:
    """Largest pairwise |p_i - p_j| / d(X_i, X_j) under standardised Euclidean distance.

    Coincident pairs are skipped; returns nan when every pair coincides.
    """
    p = np.asarray(p, dtype=float)
    X = np.asarray(X, dtype=float)
    n = p.size
    if X.shape[0] != n:
        raise DataError("lipschitz inputs have inconsistent lengths")
    if n < 2:
        raise DataError("need at least two points for a Lipschitz estimate")
    s = np.ones(X.shape[1]) if scaling is None else scaling.s
    if s.shape != (X.shape[1],):
        raise DataError("scaling dimension differs from feature count")
    best = -math.inf
    for lo, hi in _blocks(n, n * X.shape[1]):
        z = (X[lo:hi, None, :] - X[None, :, :]) / s
        dist = np.sqrt(np.sum(z * z, axis=2))
        gap = np.abs(p[lo:hi, None] - p[None, :])
        ok = dist > 0
        if ok.any():
            best = max(best, float(np.max(gap[ok] / dist[ok])))
    return best if best > -math.inf else float("nan")


def odds_ratio(p, a) -> float:
    """Odds of the class-mean prediction for a=1 over that for a=0."""
    p1, p0 = _class_rates(p, a)
    for c, v in ((1, p1), (0, p0)):
        if not 0.0 < v < 1.0:
            raise DataError(f"class {c} mean prediction {v} has undefined odds")
    return (p1 / (1 - p1)) / (p0 / (1 - p0))


@dataclass
class EvalReport:
    accuracy: float
    discrimination: float
    resentment: float
    lipschitz: float | None
    odds_ratio: float | None
    threshold: float = DEFAULT_THRESHOLD

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "EvalReport":
        return cls(**{k: doc[k] for k in ("accuracy", "discrimination", "resentment", "lipschitz", "odds_ratio", "threshold")})


def evaluate(
    p,
    X_raw,
    a,
    y,
    tags: Sequence[MonotonicityTag],
    scaling: ScalingParams | None = None,
    threshold: float = DEFAULT_THRESHOLD,
) -> EvalReport:
    """All metrics on one split. ``X_raw`` is unscaled; ``scaling`` standardises distances."""
    y_hat = hard_predictions(p, threshold)
    lip = lipschitz_estimate(p, X_raw, scaling) if len(p) >= 2 else float("nan")
    try:
        odds = odds_ratio(p, a)
    except DataError:
        odds = None
    return EvalReport(
        accuracy=accuracy(y_hat, y),
        discrimination=discrimination(y_hat, a),
        resentment=resentment(p, X_raw, a, tags),
        lipschitz=None if math.isnan(lip) else lip,
        odds_ratio=odds,
        threshold=threshold,
    )
