"""Experiment harness: alpha sweeps, transform convergence study, two-group score demo."""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .data import (
    FIG1_CUTOFF,
    Dataset,
    MonotonicityTag,
    ScalingParams,
    apply_scaling,
    fit_scaling,
    split,
    synth_fig1,
)
from .errors import MonofairError
from .loss import LossConfig, LossVariant, demographic_parity
from .metrics import evaluate, odds_ratio
from .network import Model, NetworkConfig, Transform, forward_batch, make_config
from .plots import records_series, scatter_svg
from .trainer import TrainConfig, fit_regression, train

log = logging.getLogger(__name__)

MODEL_KINDS = ("fnn", "fmnn")
_KIND_IDS = {"fnn": 1, "fmnn": 2}

SWEEP_PLOTS = {
    "accuracy_vs_discrimination.svg": ("discrimination", "accuracy", "Discrimination", "Accuracy"),
    "discrimination_vs_resentment.svg": ("discrimination", "resentment", "Discrimination", "Resentment"),
    "lipschitz_vs_discrimination.svg": ("discrimination", "lipschitz", "Discrimination", "Lipschitz estimate"),
}


def sample_alpha(u):
    """Inverse CDF of Beta(1/2, 1/2): maps uniform draws to fairness weights."""
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("uniform draw must lie strictly inside (0, 1)")
    out = np.sin(np.pi * u / 2) ** 2
    return float(out) if out.ndim == 0 else out


def run_seed(master_seed: int, model_kind: str, index: int) -> int:
    """Deterministic per-run seed; independent of how many runs exist."""
    seq = np.random.SeedSequence([int(master_seed), _KIND_IDS[model_kind], int(index)])
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def _uniform_open(rng: np.random.Generator) -> float:
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return u


# ---------------------------------------------------------------- prepared splits


@dataclass
class PreparedSplits:
    """Raw and scaled train/val/test splits sharing one scaling."""

    raw: tuple[Dataset, Dataset, Dataset]
    scaling: ScalingParams

    @property
    def scaled(self) -> tuple[Dataset, Dataset, Dataset]:
        return tuple(apply_scaling(d, self.scaling) for d in self.raw)


def prepare_splits(data: Dataset, fractions: Sequence[float], seed: int) -> PreparedSplits:
    parts = split(data, fractions, seed)
    return PreparedSplits(raw=parts, scaling=fit_scaling(parts[0]))


# ---------------------------------------------------------------- single model


@dataclass
class ModelSpec:
    """Everything needed to train one model besides data and alpha."""

    hidden_widths: tuple[int, ...] = (10, 10, 10, 10)
    hidden_activation: str = "tanh"
    transform: Transform = Transform.ELUMOD
    train: TrainConfig = field(default_factory=TrainConfig)
    threshold: float = 0.5

    def network(self, tags: Sequence[MonotonicityTag], model_kind: str) -> NetworkConfig:
        if model_kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {model_kind!r}")
        return make_config(
            tags,
            monotone=model_kind == "fmnn",
            hidden_widths=self.hidden_widths,
            hidden_activation=self.hidden_activation,
            transform=self.transform,
        )


def train_model(
    splits: PreparedSplits,
    model_kind: str,
    alpha: float,
    spec: ModelSpec,
    seed: int,
    log_stream=None,
):
    """Train one FNN/FMNN and evaluate it on the test split.

    Returns ``(Model, TrainResult, EvalReport)``.
    """
    tr, va, te = splits.scaled
    tags = tr.schema.feature_tags
    net = spec.network(tags, model_kind)
    result = train(
        tr, va, net, LossConfig(alpha=alpha), replace(spec.train, seed=seed), log_stream=log_stream
    )
    model = Model(
        config=net,
        params=result.best_params,
        scaling=splits.scaling,
        feature_names=tr.schema.feature_names,
        meta={"model_kind": model_kind, "alpha": alpha, "seed": seed, "threshold": spec.threshold},
    )
    raw_test = splits.raw[2]
    report = evaluate(
        model.predict(raw_test.X), raw_test.X, raw_test.a, raw_test.y, tags, splits.scaling, spec.threshold
    )
    return model, result, report


# ---------------------------------------------------------------- sweep


@dataclass
class SweepConfig:
    n_models: int = 100
    model_kinds: tuple[str, ...] = MODEL_KINDS
    master_seed: int = 0
    fractions: tuple[float, float, float] = (0.64, 0.16, 0.2)
    spec: ModelSpec = field(default_factory=ModelSpec)

    def __post_init__(self):
        if self.n_models < 1:
            raise ValueError("n_models must be at least 1")
        for k in self.model_kinds:
            if k not in MODEL_KINDS:
                raise ValueError(f"unknown model kind {k!r}")


@dataclass
class RunRecord:
    model_kind: str
    run_index: int
    seed: int
    alpha: float
    report: dict | None
    epochs_run: int | None = None
    stopped_early: bool | None = None
    error: str | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _sweep_task(splits: PreparedSplits, kind: str, index: int, seed: int, spec: ModelSpec) -> dict:
    alpha = sample_alpha(_uniform_open(np.random.default_rng([seed, 1])))
    try:
        _, result, report = train_model(splits, kind, alpha, spec, seed)
    except MonofairError as exc:
        return RunRecord(kind, index, seed, alpha, None, error=str(exc)).to_dict()
    return RunRecord(
        kind, index, seed, alpha, report.to_dict(), result.epochs_run, result.stopped_early
    ).to_dict()


def load_records(path: str | Path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(json.loads(line))
    return out


def run_sweep(
    data: Dataset,
    cfg: SweepConfig,
    out_dir: str | Path,
    threads: int = 1,
    baseline_records: Iterable[dict] = (),
    progress: Callable[[dict], None] | None = None,
) -> list[dict]:
    """Train ``n_models`` per model kind with Beta(1/2, 1/2) alphas.

    Records go to ``records.jsonl`` as runs finish; seeds already present
    are skipped, so an interrupted sweep resumes where it stopped.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rec_path = out_dir / "records.jsonl"
    records = load_records(rec_path)
    done = {r["seed"] for r in records}
    splits = prepare_splits(data, cfg.fractions, cfg.master_seed)

    todo = [
        (kind, i, run_seed(cfg.master_seed, kind, i))
        for kind in cfg.model_kinds
        for i in range(cfg.n_models)
    ]
    todo = [t for t in todo if t[2] not in done]

    with rec_path.open("a", encoding="utf-8") as fh:

        def emit(rec: dict) -> None:
            fh.write(json.dumps(rec) + "\n")
            fh.flush()
            records.append(rec)
            if progress is not None:
                progress(rec)

        if threads <= 1 or len(todo) <= 1:
            for kind, i, seed in todo:
                emit(_sweep_task(splits, kind, i, seed, cfg.spec))
        else:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                futures = [pool.submit(_sweep_task, splits, kind, i, seed, cfg.spec) for kind, i, seed in todo]
                for fut in as_completed(futures):
                    emit(fut.result())

    write_sweep_plots(records, out_dir, baseline_records)
    return records


def write_sweep_plots(records: list[dict], out_dir: str | Path, baseline_records: Iterable[dict] = ()) -> dict[str, int]:
    """Three scatter plots; third-party baseline records are drawn as their own series."""
    baseline = [dict(r, model_kind=r.get("model_kind", "baseline")) for r in baseline_records]
    counts = {}
    for name, (xk, yk, xl, yl) in SWEEP_PLOTS.items():
        series = records_series(list(records) + baseline, xk, yk)
        counts[name] = scatter_svg(Path(out_dir) / name, series, xl, yl, title=f"{yl} vs {xl}")
    return counts


# ---------------------------------------------------------------- convergence study


def _ramp(x):
    return 1.0 / (1.0 + np.exp(-12.0 * x))


# name -> (function on [-1, 1], monotone non-decreasing?)
CONVERGENCE_FUNCTIONS: dict[str, tuple[Callable, bool]] = {
    "sin": (lambda x: np.sin(2 * np.pi * x), False),
    "abs": (np.abs, False),
    "ramp": (_ramp, True),
    "cube": (lambda x: x**3, True),
    "constant": (lambda x: np.full_like(x, 0.5), True),
}
DEFAULT_CONVERGENCE_SUITE = ("sin", "abs", "ramp", "cube")
CONVERGENCE_TRANSFORMS = (Transform.SQUARE, Transform.ABS, Transform.ELUMOD, Transform.SOFTPLUS)

DEVIANCE_RATIO = 0.95
DEVIANCE_FLOOR = 1e-2


@dataclass(frozen=True)
class ConvergenceSettings:
    n_points: int = 100
    hidden_widths: tuple[int, ...] = (10, 10, 10, 10)
    train: TrainConfig = TrainConfig(batch_size=100, max_epochs=600, patience=600, learning_rate=1e-2)


def is_deviant(fit_mse: float, baseline_mse: float) -> bool:
    """A fit is deviant when it does no better than the constant mean predictor.

    The absolute floor keeps near-perfect fits of constant targets (whose
    baseline MSE is zero) non-deviant.
    """
    return fit_mse >= DEVIANCE_RATIO * baseline_mse and fit_mse > DEVIANCE_FLOOR


def convergence_run(function: str, transform: Transform | str, seed: int, settings: ConvergenceSettings) -> float:
    """Training MSE of one randomly initialised monotone fit."""
    f, _ = CONVERGENCE_FUNCTIONS[function]
    x = np.linspace(-1.0, 1.0, settings.n_points)[:, None]
    y = f(x[:, 0])
    cfg = NetworkConfig(
        input_tags=(MonotonicityTag.NONDECREASING,),
        hidden_widths=settings.hidden_widths,
        transform=Transform(transform),
        output_activation="identity",
    )
    try:
        result = fit_regression(x, y, cfg, replace(settings.train, seed=seed))
    except MonofairError:
        return float("inf")
    p = forward_batch(result.best_params, cfg, x)
    return float(np.mean((p - y) ** 2))


def convergence_study(
    functions: Sequence[str] = DEFAULT_CONVERGENCE_SUITE,
    transforms: Sequence[Transform | str] = CONVERGENCE_TRANSFORMS,
    n_inits: int = 50,
    seed: int = 0,
    settings: ConvergenceSettings = ConvergenceSettings(),
    threads: int = 1,
) -> list[dict]:
    """Proportion of non-deviant fits per (function, transform) cell."""
    if n_inits < 1:
        raise ValueError("n_inits must be at least 1")
    for name in functions:
        if name not in CONVERGENCE_FUNCTIONS:
            raise ValueError(f"unknown test function {name!r}")
    transforms = [Transform(t) for t in transforms]
    jobs = []
    for fi, name in enumerate(functions):
        for ti, t in enumerate(transforms):
            for k in range(n_inits):
                s = int(np.random.SeedSequence([seed, fi, k]).generate_state(1)[0])
                jobs.append((name, t, s))
    if threads <= 1:
        mses = [convergence_run(name, t, s, settings) for name, t, s in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            mses = list(pool.map(convergence_run, *zip(*jobs), [settings] * len(jobs)))

    rows = []
    it = iter(mses)
    for name in functions:
        f, monotone = CONVERGENCE_FUNCTIONS[name]
        y = f(np.linspace(-1.0, 1.0, settings.n_points))
        base = float(np.mean((y - y.mean()) ** 2))
        for t in transforms:
            cell = [next(it) for _ in range(n_inits)]
            good = sum(not is_deviant(m, base) for m in cell)
            rows.append(
                dict(
                    function=name,
                    transform=t.value,
                    monotone_target=monotone,
                    n_inits=n_inits,
                    non_deviant=good,
                    proportion=good / n_inits,
                    median_mse=float(np.median(cell)),
                    baseline_mse=base,
                )
            )
    return rows


def write_convergence_outputs(rows: list[dict], out_dir: str | Path) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = out_dir / "convergence.csv"
    with table.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    functions = list(dict.fromkeys(r["function"] for r in rows))
    series: dict[str, list] = {}
    for r in rows:
        series.setdefault(r["transform"], []).append((functions.index(r["function"]), r["proportion"]))
    plot = out_dir / "convergence.svg"
    scatter_svg(plot, series, "Test function", "Non-deviant proportion", "Transform convergence",
                x_categories=functions)
    return table, plot


# ---------------------------------------------------------------- two-group score demo


@dataclass
class ScoreModelResult:
    label: str
    model_kind: str
    alpha: float
    odds_ratio: float
    parity: float
    max_drop: float
    model: Model
    parity_se: float = 0.0
    val_score: float = 0.0


def max_monotonicity_drop(model: Model, lo: float = -6.0, hi: float = 6.0, points: int = 1201) -> float:
    """Largest p(x1) - p(x2) over grid pairs x1 < x2 of a one-input model."""
    grid = np.linspace(lo, hi, points)[:, None]
    p = model.predict(grid)
    return float(np.max(np.maximum.accumulate(p) - p))


@dataclass
class Fig1Settings:
    n: int = 10_000
    seed: int = 0
    fractions: tuple[float, float, float] = (0.64, 0.16, 0.2)
    alpha_grid: tuple[float, ...] = (0.7, 0.75, 0.8)
    budget_weight: float = 100.0
    spec: ModelSpec = field(
        default_factory=lambda: ModelSpec(
            train=TrainConfig(batch_size=1024, max_epochs=2000, patience=400, learning_rate=3e-3)
        )
    )


def score_model(splits: PreparedSplits, model_kind: str, alpha: float, budget: float, settings: Fig1Settings, label: str):
    tr, va, te = splits.scaled
    net = settings.spec.network(tr.schema.feature_tags, model_kind)
    loss = LossConfig(alpha=alpha, variant=LossVariant.FIG1, fig1_budget=budget, fig1_budget_weight=settings.budget_weight)
    result = train(tr, va, net, loss, replace(settings.spec.train, seed=settings.seed))
    model = Model(net, result.best_params, splits.scaling, tr.schema.feature_names,
                  meta={"model_kind": model_kind, "alpha": alpha})
    raw_val, raw_test = splits.raw[1], splits.raw[2]
    p_val = model.predict(raw_val.X)
    p_test = model.predict(raw_test.X)
    return ScoreModelResult(
        label=label,
        model_kind=model_kind,
        alpha=alpha,
        odds_ratio=odds_ratio(p_test, raw_test.a),
        parity=demographic_parity(p_val, raw_val.a),
        max_drop=max_monotonicity_drop(model),
        model=model,
        parity_se=parity_standard_error(p_val, raw_val.a),
        val_score=float(np.mean(p_val * raw_val.score)),
    )


def parity_standard_error(p, a) -> float:
    """Standard error of the difference in group means of ``p``."""
    p, a = np.asarray(p, dtype=float), np.asarray(a)
    groups = [p[a == c] for c in (0, 1)]
    return float(np.sqrt(sum(g.var(ddof=1) / g.size for g in groups)))


def select_fairest(candidates: Sequence[ScoreModelResult], n_se: float = 2.0) -> ScoreModelResult:
    """Candidate with the lowest validation parity, up to sampling noise.

    Parities within ``n_se`` standard errors of the lowest are treated as
    tied; the tie goes to the higher validation score.
    """
    best = min(candidates, key=lambda r: r.parity)
    tied = [r for r in candidates if r.parity <= best.parity + n_se * r.parity_se]
    return max(tied, key=lambda r: r.val_score)


def fig1_replication(
    settings: Fig1Settings | None = None,
    on_candidate: Callable[[ScoreModelResult], None] | None = None,
) -> dict[str, ScoreModelResult]:
    """Unfair, fair, and monotone-fair soft classifiers on the two-group score data.

    The acceptance budget is the share of training rows above the x = 1
    cutoff. The fairness weight of the two fair models is picked from
    ``alpha_grid`` by validation parity (see ``select_fairest``).
    """
    settings = settings or Fig1Settings()
    data = synth_fig1(settings.n, settings.seed)
    splits = prepare_splits(data, settings.fractions, settings.seed)
    budget = float(np.mean(splits.raw[0].X[:, 0] > FIG1_CUTOFF))
    report = on_candidate or (lambda r: None)
    out = {"unfair": score_model(splits, "fnn", 0.0, budget, settings, "unfair")}
    report(out["unfair"])
    for label, kind in (("fair", "fnn"), ("mono_fair", "fmnn")):
        candidates = []
        for a in settings.alpha_grid:
            candidates.append(score_model(splits, kind, a, budget, settings, label))
            report(candidates[-1])
        out[label] = select_fairest(candidates)
    return out


def default_threads() -> int:
    return max(1, os.cpu_count() or 1)
