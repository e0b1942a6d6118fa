"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 training failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import datasets
from .data import (
    FIG1_SCHEMA,
    SURFACE_SCHEMA,
    DatasetSchema,
    load_csv,
    synth_fig1,
    synth_surface,
    write_csv,
    write_surface_csv,
)
from .errors import DataError, MonofairError, NetworkError, TrainingError
from .experiments import (
    CONVERGENCE_FUNCTIONS,
    DEFAULT_CONVERGENCE_SUITE,
    ConvergenceSettings,
    Fig1Settings,
    ModelSpec,
    SweepConfig,
    convergence_study,
    fig1_replication,
    load_records,
    prepare_splits,
    run_sweep,
    train_model,
    write_convergence_outputs,
)
from .metrics import evaluate
from .network import Model, Transform
from .trainer import TrainConfig

log = logging.getLogger("monofair")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRAIN = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _csv_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _csv_words(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS
    p.add_argument("--seed", type=int, default=d if suppress else 0, help="master RNG seed")
    p.add_argument("--out", type=Path, default=d if suppress else Path("."), help="output directory")
    p.add_argument("--threads", type=int, default=d if suppress else 1, help="worker processes for sweeps")
    p.add_argument("-v", "--verbose", action="store_true", default=d if suppress else False)


def _training_flags(p: argparse.ArgumentParser, batch_size: int = 256) -> None:
    g = p.add_argument_group("model and training")
    g.add_argument("--hidden", type=_csv_ints, default=(10, 10, 10, 10), help="hidden widths, e.g. 10,10,10,10")
    g.add_argument("--activation", choices=["tanh", "logistic"], default="tanh")
    g.add_argument("--transform", choices=[t.value for t in Transform if t is not Transform.NONE], default="elumod")
    g.add_argument("--batch-size", type=int, default=batch_size)
    g.add_argument("--epochs", type=int, default=2000, help="maximum epochs")
    g.add_argument("--patience", type=int, default=50)
    g.add_argument("--lr", type=float, default=1e-3)
    g.add_argument("--split", type=_csv_floats, default=(0.64, 0.16, 0.2), help="train,val,test fractions")
    g.add_argument("--threshold", type=float, default=0.5, help="cutoff for hard predictions")


def _spec(args) -> ModelSpec:
    return ModelSpec(
        hidden_widths=args.hidden,
        hidden_activation=args.activation,
        transform=Transform(args.transform),
        train=TrainConfig(
            batch_size=args.batch_size, max_epochs=args.epochs, patience=args.patience, learning_rate=args.lr
        ),
        threshold=args.threshold,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="monofair", description="Monotonically fair neural network experiments.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic dataset and its schema")
    p.add_argument("kind", choices=["fig1", "sinclamp", "sumsquares"])
    p.add_argument("--n", type=int, default=10_000)

    p = sub.add_parser("train", parents=[common], help="train one FNN/FMNN and evaluate on the test split")
    p.add_argument("data", type=Path)
    p.add_argument("schema", type=Path)
    p.add_argument("--model", choices=["fnn", "fmnn"], default="fmnn")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--log", action="store_true", help="write per-epoch training log to OUT/train_log.tsv")
    _training_flags(p)

    p = sub.add_parser("eval", parents=[common], help="evaluate a saved model on a dataset")
    p.add_argument("model", type=Path)
    p.add_argument("data", type=Path)
    p.add_argument("schema", type=Path)
    p.add_argument("--threshold", type=float, default=None, help="defaults to the model's training threshold")

    p = sub.add_parser("sweep", parents=[common], help="alpha sweep over FNN and FMNN models")
    p.add_argument("data", type=Path)
    p.add_argument("schema", type=Path)
    p.add_argument("--n-models", type=int, default=100)
    p.add_argument("--kinds", type=_csv_words, default=("fnn", "fmnn"))
    p.add_argument("--baseline", type=Path, action="append", default=[],
                   help="JSON-lines records from another method to overlay on the plots")
    _training_flags(p)

    p = sub.add_parser("convergence-study", parents=[common], help="compare weight transforms on 1-D fits")
    p.add_argument("--functions", type=_csv_words, default=DEFAULT_CONVERGENCE_SUITE,
                   help=f"subset of {','.join(CONVERGENCE_FUNCTIONS)}")
    p.add_argument("--transforms", type=_csv_words, default=("square", "abs", "elumod", "softplus"))
    p.add_argument("--n-inits", type=int, default=50)
    p.add_argument("--n-points", type=int, default=100)
    p.add_argument("--epochs", type=int, default=600)

    p = sub.add_parser("fig1", parents=[common], help="unfair / fair / monotone-fair score demo")
    p.add_argument("--n", type=int, default=10_000)

    p = sub.add_parser("prepare", parents=[common], help="convert a raw public dataset to a schema-conformant CSV")
    p.add_argument("dataset", choices=sorted(datasets.PREPARERS))
    p.add_argument("raw", type=Path)

    return parser


# ---------------------------------------------------------------- commands


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def cmd_synth(args) -> int:
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    if args.n < 1:
        raise DataError("--n must be at least 1")
    csv_path, schema_path = out / f"{args.kind}.csv", out / f"{args.kind}.schema.json"
    if args.kind == "fig1":
        write_csv(csv_path, synth_fig1(args.n, args.seed))
        FIG1_SCHEMA.save(schema_path)
    else:
        write_surface_csv(csv_path, synth_surface(args.kind, args.n, args.seed))
        SURFACE_SCHEMA.save(schema_path)
    print(f"wrote {csv_path} and {schema_path}")
    return EXIT_OK


def cmd_train(args) -> int:
    schema = DatasetSchema.load(args.schema)
    data = load_csv(args.data, schema)
    if not 0.0 <= args.alpha <= 1.0:
        raise DataError("--alpha must lie in [0, 1]")
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    splits = prepare_splits(data, args.split, args.seed)
    log_fh = (out / "train_log.tsv").open("w", encoding="utf-8") if args.log else None
    try:
        model, result, report = train_model(splits, args.model, args.alpha, _spec(args), args.seed, log_fh)
    finally:
        if log_fh:
            log_fh.close()
    model.meta.update(epochs_run=result.epochs_run, stopped_early=result.stopped_early)
    model.save(out / "model.json")
    write_csv(out / "test.csv", splits.raw[2])
    _write_json(out / "report.json", report.to_dict())
    print(report.to_json())
    return EXIT_OK


def cmd_eval(args) -> int:
    model = Model.load(args.model)
    schema = DatasetSchema.load(args.schema)
    data = load_csv(args.data, schema)
    if data.d != model.config.d:
        raise DataError(f"model expects {model.config.d} features, data has {data.d}")
    if model.feature_names is not None and model.feature_names != schema.feature_names:
        raise DataError(f"feature names differ: model {model.feature_names}, schema {schema.feature_names}")
    if model.meta.get("model_kind") == "fmnn" and list(model.config.input_tags) != schema.feature_tags:
        raise DataError("monotonicity tags of the model and the schema differ")
    threshold = args.threshold if args.threshold is not None else model.meta.get("threshold", 0.5)
    report = evaluate(model.predict(data.X), data.X, data.a, data.y, schema.feature_tags, model.scaling, threshold)
    args.out.mkdir(parents=True, exist_ok=True)
    _write_json(args.out / "eval_report.json", report.to_dict())
    print(report.to_json())
    return EXIT_OK


def cmd_sweep(args) -> int:
    schema = DatasetSchema.load(args.schema)
    data = load_csv(args.data, schema)
    cfg = SweepConfig(n_models=args.n_models, model_kinds=args.kinds, master_seed=args.seed,
                      fractions=args.split, spec=_spec(args))
    baseline = [r for path in args.baseline for r in load_records(path)]

    def progress(rec):
        if rec.get("error"):
            log.warning("%s run %d failed: %s", rec["model_kind"], rec["run_index"], rec["error"])
        else:
            log.info("%s run %d alpha=%.3f %s", rec["model_kind"], rec["run_index"], rec["alpha"], rec["report"])

    records = run_sweep(data, cfg, args.out, threads=args.threads, baseline_records=baseline, progress=progress)
    failed = sum(1 for r in records if r.get("error"))
    print(f"{len(records)} records in {args.out / 'records.jsonl'} ({failed} failed)")
    return EXIT_OK


def cmd_convergence(args) -> int:
    settings = ConvergenceSettings(
        n_points=args.n_points,
        train=TrainConfig(batch_size=max(2, args.n_points), max_epochs=args.epochs, patience=args.epochs,
                          learning_rate=1e-2),
    )
    try:
        rows = convergence_study(args.functions, args.transforms, args.n_inits, args.seed, settings, args.threads)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    table, plot = write_convergence_outputs(rows, args.out)
    for r in rows:
        print(f"{r['function']:>9} {r['transform']:>9} {r['proportion']:.2f}")
    print(f"wrote {table} and {plot}")
    return EXIT_OK


def cmd_fig1(args) -> int:
    results = fig1_replication(Fig1Settings(n=args.n, seed=args.seed))
    args.out.mkdir(parents=True, exist_ok=True)
    summary = {
        k: {"model_kind": r.model_kind, "alpha": r.alpha, "odds_ratio": r.odds_ratio,
            "validation_parity": r.parity, "max_monotonicity_drop": r.max_drop}
        for k, r in results.items()
    }
    _write_json(args.out / "fig1_summary.json", summary)
    for k, r in results.items():
        r.model.save(args.out / f"fig1_{k}.json")
        print(f"{k:>10}: odds ratio {r.odds_ratio:.3f}, alpha {r.alpha}, max drop {r.max_drop:.3f}")
    return EXIT_OK


def cmd_prepare(args) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    csv_path, schema_path = datasets.PREPARERS[args.dataset](args.raw, args.out)
    print(f"wrote {csv_path} and {schema_path}")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "convergence-study": cmd_convergence,
    "fig1": cmd_fig1,
    "prepare": cmd_prepare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except TrainingError as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return EXIT_TRAIN
    except (DataError, NetworkError, MonofairError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
