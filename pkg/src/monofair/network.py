"""Feedforward networks that are monotone in selected inputs.

Raw weights are unconstrained. Before use they pass through a positive
transform: every weight after the first layer is made positive, and
first-layer weights of monotone inputs are made positive (non-decreasing)
or negative (non-increasing). With a non-decreasing hidden activation
the output is then monotone in those inputs for any raw parameter values.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .data import MonotonicityTag, ScalingParams
from .errors import NetworkError

MODEL_FORMAT = "monofair-model"
MODEL_VERSION = 1

EXP_CLAMP = 500.0


class Transform(str, Enum):
    ELUMOD = "elumod"
    SQUARE = "square"
    ABS = "abs"
    SOFTPLUS = "softplus"
    NONE = "none"


# ---------------------------------------------------------------- diagnostics

_clamp_lock = threading.Lock()
_clamp_events = 0


def clamp_events() -> int:
    """Number of exponent arguments clipped to +-EXP_CLAMP since last reset."""
    return _clamp_events


def reset_clamp_events() -> None:
    global _clamp_events
    with _clamp_lock:
        _clamp_events = 0


def _clamp(z: np.ndarray) -> np.ndarray:
    global _clamp_events
    over = np.abs(z) > EXP_CLAMP
    if over.any():
        with _clamp_lock:
            _clamp_events += int(over.sum())
        z = np.clip(z, -EXP_CLAMP, EXP_CLAMP)
    return z


# ---------------------------------------------------------------- elementwise maps


def tau(x, kind: Transform | str = Transform.ELUMOD):
    """Map raw weights to non-negative effective weights."""
    kind = Transform(kind)
    x = np.asarray(x, dtype=float)
    if kind is Transform.ELUMOD:
        return np.where(x > 1.0, x, np.exp(_clamp(np.minimum(x, 1.0) - 1.0)))
    if kind is Transform.SQUARE:
        return x * x
    if kind is Transform.ABS:
        return np.abs(x)
    if kind is Transform.SOFTPLUS:
        return np.logaddexp(0.0, x)
    return x


def tau_prime(x, kind: Transform | str = Transform.ELUMOD):
    """Derivative of `tau`; the elumod branch point x=1 gets slope 1."""
    kind = Transform(kind)
    x = np.asarray(x, dtype=float)
    if kind is Transform.ELUMOD:
        return np.where(x >= 1.0, 1.0, np.exp(_clamp(np.minimum(x, 1.0) - 1.0)))
    if kind is Transform.SQUARE:
        return 2.0 * x
    if kind is Transform.ABS:
        return np.sign(x)
    if kind is Transform.SOFTPLUS:
        return logistic(x)
    return np.ones_like(x)


def logistic(z):
    """Numerically stable branchwise logistic function."""
    z = _clamp(np.asarray(z, dtype=float))
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _tanh_grad(z, h):
    return 1.0 - h * h


def _logistic_grad(z, h):
    return h * (1.0 - h)


# name -> (activation, derivative given (pre-activation, activation))
ACTIVATIONS: dict[str, tuple[Callable, Callable]] = {
    "tanh": (np.tanh, _tanh_grad),
    "logistic": (logistic, _logistic_grad),
}

OUTPUTS: dict[str, tuple[Callable, Callable]] = {
    "logistic": (logistic, _logistic_grad),
    "identity": (lambda z: z, lambda z, h: np.ones_like(z)),
}


# ---------------------------------------------------------------- config / params


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture and monotonicity layout.

    ``output_activation`` is logistic for classifiers; ``identity`` is used
    for the regression fits (surfaces, convergence study).
    """

    input_tags: tuple[MonotonicityTag, ...]
    hidden_widths: tuple[int, ...] = (10, 10, 10, 10)
    hidden_activation: str = "tanh"
    transform: Transform = Transform.ELUMOD
    output_activation: str = "logistic"

    def __post_init__(self):
        object.__setattr__(self, "input_tags", tuple(MonotonicityTag(t) for t in self.input_tags))
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        object.__setattr__(self, "transform", Transform(self.transform))
        if not self.input_tags:
            raise NetworkError("network needs at least one input")
        if not self.hidden_widths or any(w < 1 for w in self.hidden_widths):
            raise NetworkError(f"hidden widths must be positive, got {self.hidden_widths}")
        if self.hidden_activation not in ACTIVATIONS:
            raise NetworkError(f"unknown hidden activation {self.hidden_activation!r}")
        if self.output_activation not in OUTPUTS:
            raise NetworkError(f"unknown output activation {self.output_activation!r}")
        if self.transform is Transform.NONE and any(t.sign for t in self.input_tags):
            raise NetworkError("monotone input tags need a weight transform")

    @property
    def d(self) -> int:
        return len(self.input_tags)

    @property
    def layer_sizes(self) -> list[int]:
        return [self.d, *self.hidden_widths, 1]

    @property
    def column_signs(self) -> np.ndarray:
        return np.array([t.sign for t in self.input_tags], dtype=float)

    def unconstrained(self) -> "NetworkConfig":
        """Same architecture with every weight left raw (the FNN baseline)."""
        return NetworkConfig(
            input_tags=(MonotonicityTag.NONE,) * self.d,
            hidden_widths=self.hidden_widths,
            hidden_activation=self.hidden_activation,
            transform=Transform.NONE,
            output_activation=self.output_activation,
        )

    def to_dict(self) -> dict:
        return {
            "input_tags": [t.value for t in self.input_tags],
            "hidden_widths": list(self.hidden_widths),
            "hidden_activation": self.hidden_activation,
            "transform": self.transform.value,
            "output_activation": self.output_activation,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NetworkConfig":
        return cls(
            input_tags=tuple(doc["input_tags"]),
            hidden_widths=tuple(doc["hidden_widths"]),
            hidden_activation=doc.get("hidden_activation", "tanh"),
            transform=doc.get("transform", "elumod"),
            output_activation=doc.get("output_activation", "logistic"),
        )


@dataclass
class NetworkParams:
    """Raw weights ``(out, in)`` and biases ``(out,)`` per layer.

    Also used to hold gradients, which share the same shapes.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def arrays(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def copy(self) -> "NetworkParams":
        return NetworkParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def ravel(self) -> np.ndarray:
        return np.concatenate([x.ravel() for x in self.arrays()])

    def with_vector(self, vec: np.ndarray) -> "NetworkParams":
        """New params of the same shapes filled from a flat vector."""
        out, i = [], 0
        for x in self.arrays():
            out.append(np.asarray(vec[i : i + x.size], dtype=float).reshape(x.shape))
            i += x.size
        n = len(self.weights)
        return NetworkParams(out[:n], out[n:])

    def zeros_like(self) -> "NetworkParams":
        return NetworkParams([np.zeros_like(w) for w in self.weights], [np.zeros_like(b) for b in self.biases])

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(x)) for x in self.arrays())

    def to_dict(self) -> dict:
        return {
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NetworkParams":
        return cls(
            [np.array(w, dtype=float).reshape(len(w), -1) for w in doc["weights"]],
            [np.array(b, dtype=float) for b in doc["biases"]],
        )


Gradient = NetworkParams


def check_shapes(params: NetworkParams, cfg: NetworkConfig) -> None:
    sizes = cfg.layer_sizes
    if len(params.weights) != len(sizes) - 1 or len(params.biases) != len(sizes) - 1:
        raise NetworkError(f"expected {len(sizes) - 1} layers, got {len(params.weights)}")
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        want = (sizes[layer + 1], sizes[layer])
        if w.shape != want or b.shape != (want[0],):
            raise NetworkError(f"layer {layer + 1}: weight {w.shape}/bias {b.shape}, expected {want}")


def init_params(cfg: NetworkConfig, rng: np.random.Generator) -> NetworkParams:
    """Glorot-uniform raw weights, zero biases."""
    sizes = cfg.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        r = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-r, r, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(weights, biases)


# ---------------------------------------------------------------- evaluation


def _layer_transform(w: np.ndarray, layer: int, cfg: NetworkConfig) -> tuple[np.ndarray, np.ndarray]:
    """Effective weights and d(effective)/d(raw) for one layer (0-based)."""
    kind = cfg.transform
    if kind is Transform.NONE:
        return w, np.ones_like(w)
    t, tp = tau(w, kind), tau_prime(w, kind)
    if layer > 0:
        return t, tp
    signs = cfg.column_signs[None, :]
    raw = signs == 0
    return np.where(raw, w, signs * t), np.where(raw, 1.0, signs * tp)


def effective_weights(params: NetworkParams, cfg: NetworkConfig) -> list[np.ndarray]:
    check_shapes(params, cfg)
    return [_layer_transform(w, layer, cfg)[0] for layer, w in enumerate(params.weights)]


@dataclass
class _Trace:
    eff: list[np.ndarray]
    deriv: list[np.ndarray]
    pre: list[np.ndarray] = field(default_factory=list)
    post: list[np.ndarray] = field(default_factory=list)


def _run(params: NetworkParams, cfg: NetworkConfig, X: np.ndarray) -> _Trace:
    check_shapes(params, cfg)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != cfg.d:
        raise NetworkError(f"input must have shape (N, {cfg.d}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NetworkError("input contains non-finite values")
    pairs = [_layer_transform(w, layer, cfg) for layer, w in enumerate(params.weights)]
    trace = _Trace([p[0] for p in pairs], [p[1] for p in pairs])
    act = ACTIVATIONS[cfg.hidden_activation][0]
    out = OUTPUTS[cfg.output_activation][0]
    h = X
    n_layers = len(params.weights)
    for layer in range(n_layers):
        z = h @ trace.eff[layer].T + params.biases[layer]
        if not np.all(np.isfinite(z)):
            raise NetworkError(f"non-finite pre-activation in layer {layer + 1}")
        h = out(z) if layer == n_layers - 1 else act(z)
        trace.pre.append(z)
        trace.post.append(h)
    return trace


def forward_batch(params: NetworkParams, cfg: NetworkConfig, X) -> np.ndarray:
    """Row-wise network output, shape ``(N,)``."""
    return _run(params, cfg, X).post[-1][:, 0]


def forward(params: NetworkParams, cfg: NetworkConfig, x) -> float:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(forward_batch(params, cfg, x)[0])


def backward(params: NetworkParams, cfg: NetworkConfig, X, upstream) -> NetworkParams:
    """Gradient w.r.t. raw parameters of ``sum_i upstream_i * output_i``.

    ``upstream`` is dL/d(output) per row, so the result is dL/d(raw params).
    """
    X = np.asarray(X, dtype=float)
    return _backprop(params, cfg, X, _run(params, cfg, X), upstream)


def forward_backward(
    params: NetworkParams, cfg: NetworkConfig, X, upstream_fn: Callable[[np.ndarray], np.ndarray]
) -> tuple[np.ndarray, NetworkParams]:
    """Outputs and raw-parameter gradient from a single forward pass.

    ``upstream_fn`` maps the outputs to dL/d(output).
    """
    X = np.asarray(X, dtype=float)
    tr = _run(params, cfg, X)
    p = tr.post[-1][:, 0]
    return p, _backprop(params, cfg, X, tr, upstream_fn(p))


def _backprop(params: NetworkParams, cfg: NetworkConfig, X: np.ndarray, tr: _Trace, upstream) -> NetworkParams:
    upstream = np.asarray(upstream, dtype=float)
    if upstream.shape != (X.shape[0],):
        raise NetworkError(f"upstream has shape {upstream.shape}, expected ({X.shape[0]},)")
    if not np.all(np.isfinite(upstream)):
        raise NetworkError("upstream gradient contains non-finite values")
    act_grad = ACTIVATIONS[cfg.hidden_activation][1]
    out_grad = OUTPUTS[cfg.output_activation][1]
    n_layers = len(params.weights)
    gw: list[np.ndarray] = [None] * n_layers
    gb: list[np.ndarray] = [None] * n_layers
    dz = upstream[:, None] * out_grad(tr.pre[-1], tr.post[-1])
    for layer in range(n_layers - 1, -1, -1):
        h_in = X if layer == 0 else tr.post[layer - 1]
        gw[layer] = (dz.T @ h_in) * tr.deriv[layer]
        gb[layer] = dz.sum(axis=0)
        if layer > 0:
            dz = (dz @ tr.eff[layer]) * act_grad(tr.pre[layer - 1], tr.post[layer - 1])
    return NetworkParams(gw, gb)


# ---------------------------------------------------------------- serialization


@dataclass
class Model:
    """Trained network plus the feature scaling it expects."""

    config: NetworkConfig
    params: NetworkParams
    scaling: ScalingParams | None = None
    feature_names: list[str] | None = None
    meta: dict = field(default_factory=dict)

    def predict(self, X_raw) -> np.ndarray:
        X = np.asarray(X_raw, dtype=float)
        if self.scaling is not None:
            X = X / self.scaling.s
        return forward_batch(self.params, self.config, X)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "config": self.config.to_dict(),
            "params": self.params.to_dict(),
            "scaling": None if self.scaling is None else self.scaling.s.tolist(),
            "feature_names": self.feature_names,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Model":
        if doc.get("format") != MODEL_FORMAT:
            raise NetworkError("not a monofair model document")
        if doc.get("version") != MODEL_VERSION:
            raise NetworkError(f"unsupported model version {doc.get('version')!r}")
        cfg = NetworkConfig.from_dict(doc["config"])
        params = NetworkParams.from_dict(doc["params"])
        check_shapes(params, cfg)
        scaling = doc.get("scaling")
        return cls(
            config=cfg,
            params=params,
            scaling=None if scaling is None else ScalingParams(np.array(scaling, dtype=float)),
            feature_names=doc.get("feature_names"),
            meta=doc.get("meta") or {},
        )

    def save(self, path: str | Path) -> None:
        # json writes floats with repr, which round-trips float64 exactly
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Model":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def make_config(tags: Sequence[MonotonicityTag], monotone: bool = True, **kwargs) -> NetworkConfig:
    """FMNN config for ``tags``, or its FNN twin when ``monotone`` is false."""
    cfg = NetworkConfig(input_tags=tuple(tags), **kwargs)
    return cfg if monotone else cfg.unconstrained()
