"""Dataset schemas, CSV ingestion, scaling, splitting and synthetic generators."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError


class MonotonicityTag(str, Enum):
    NONDECREASING = "nondecreasing"
    NONINCREASING = "nonincreasing"
    NONE = "none"

    @property
    def sign(self) -> int:
        """+1 / -1 for monotone columns, 0 for unconstrained ones."""
        return {"nondecreasing": 1, "nonincreasing": -1, "none": 0}[self.value]


class Role(str, Enum):
    FEATURE = "feature"
    PROTECTED = "protected"
    TARGET = "target"


@dataclass(frozen=True)
class Column:
    name: str
    role: Role
    tag: MonotonicityTag = MonotonicityTag.NONE


@dataclass(frozen=True)
class DatasetSchema:
    """Ordered column roles plus a monotonicity tag per feature.

    A schema may omit the protected column (regression tables such as the
    synthetic surfaces); `require_protected` enforces it for classification.
    """

    columns: tuple[Column, ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DataError(f"duplicate column names in schema: {dupes}")
        roles = [c.role for c in self.columns]
        if roles.count(Role.TARGET) != 1:
            raise DataError("schema needs exactly one target column")
        if roles.count(Role.PROTECTED) > 1:
            raise DataError("schema allows at most one protected column")
        if Role.FEATURE not in roles:
            raise DataError("schema needs at least one feature column")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def features(self) -> list[Column]:
        return [c for c in self.columns if c.role is Role.FEATURE]

    @property
    def feature_names(self) -> list[str]:
        return [c.name for c in self.features]

    @property
    def feature_tags(self) -> list[MonotonicityTag]:
        return [c.tag for c in self.features]

    @property
    def protected_name(self) -> str | None:
        for c in self.columns:
            if c.role is Role.PROTECTED:
                return c.name
        return None

    @property
    def target_name(self) -> str:
        return next(c.name for c in self.columns if c.role is Role.TARGET)

    def require_protected(self) -> str:
        name = self.protected_name
        if name is None:
            raise DataError("schema has no protected column")
        return name

    def to_dict(self) -> dict:
        return {
            "columns": [
                {"name": c.name, "role": c.role.value, "monotonic": c.tag.value}
                for c in self.columns
            ]
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DatasetSchema":
        try:
            cols = tuple(
                Column(
                    name=str(c["name"]),
                    role=Role(c["role"]),
                    tag=MonotonicityTag(c.get("monotonic", "none")),
                )
                for c in doc["columns"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed schema document: {exc}") from exc
        return cls(cols)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DatasetSchema":
        path = Path(path)
        if not path.is_file():
            raise DataError(f"schema file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(doc)


def packaged_schema(name: str) -> DatasetSchema:
    """Load one of the shipped schemas: ``law_school``, ``compas`` or ``german_credit``."""
    ref = resources.files("monofair") / "schemas" / f"{name}.json"
    if not ref.is_file():
        raise DataError(f"no packaged schema named {name!r}")
    return DatasetSchema.from_dict(json.loads(ref.read_text(encoding="utf-8")))


@dataclass
class Dataset:
    """Feature matrix, binary protected attribute and binary outcome.

    ``score`` is the optional continuous outcome used by the score
    maximisation objective; it travels with row subsets.
    """

    X: np.ndarray
    a: np.ndarray
    y: np.ndarray
    schema: DatasetSchema
    score: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.a = np.asarray(self.a, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise DataError(f"X must be 2-D, got shape {self.X.shape}")
        n, d = self.X.shape
        if self.a.shape != (n,) or self.y.shape != (n,):
            raise DataError(
                f"row count mismatch: X has {n}, a has {self.a.shape}, y has {self.y.shape}"
            )
        if d != len(self.schema.features):
            raise DataError(f"X has {d} columns but schema lists {len(self.schema.features)} features")
        if not np.all(np.isfinite(self.X)):
            raise DataError("X contains non-finite entries")
        if not np.all((self.a == 0) | (self.a == 1)):
            raise DataError("protected attribute must be binary")
        if not np.all((self.y == 0) | (self.y == 1)):
            raise DataError("target must be binary")
        if self.score is not None:
            self.score = np.asarray(self.score, dtype=float)
            if self.score.shape != (n,):
                raise DataError("score length differs from row count")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def tags(self) -> list[MonotonicityTag]:
        return self.schema.feature_tags

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            X=self.X[idx],
            a=self.a[idx],
            y=self.y[idx],
            schema=self.schema,
            score=None if self.score is None else self.score[idx],
        )


@dataclass(frozen=True)
class ScalingParams:
    """Per-feature training standard deviations (denominator N-1)."""

    s: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 1 or not np.all(np.isfinite(s)) or not np.all(s > 0):
            raise DataError("scaling parameters must be a finite positive vector")
        object.__setattr__(self, "s", s)

    @classmethod
    def identity(cls, d: int) -> "ScalingParams":
        return cls(np.ones(d))


# ---------------------------------------------------------------- CSV I/O


def _parse_float(cell: str, line: int, col: str) -> float:
    if cell.strip() == "":
        raise DataError(f"line {line}, column {col!r}: empty cell")
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"line {line}, column {col!r}: non-numeric value {cell!r}") from None
    if not math.isfinite(value):
        raise DataError(f"line {line}, column {col!r}: non-finite value {cell!r}")
    return value


def _parse_binary(cell: str, line: int, col: str) -> int:
    value = _parse_float(cell, line, col)
    if value not in (0.0, 1.0):
        raise DataError(f"line {line}, column {col!r}: expected 0 or 1, got {cell!r}")
    return int(value)


def _read_rows(path: Path, schema: DatasetSchema) -> tuple[list[str], list[list[str]]]:
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if header != schema.names:
            raise DataError(f"{path}: header {header} does not match schema columns {schema.names}")
        rows = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: line {line} has {len(row)} cells, expected {len(header)}")
            rows.append((line, row))
    return header, rows


def load_csv(path: str | Path, schema: DatasetSchema) -> Dataset:
    """Read a classification CSV whose header matches ``schema`` exactly.

    Rows keep file order; no imputation is done. Errors name the offending
    line (1-based, header is line 1) and column.
    """
    path = Path(path)
    schema.require_protected()
    header, rows = _read_rows(path, schema)
    feats = schema.feature_names
    pos = {name: i for i, name in enumerate(header)}
    X = np.empty((len(rows), len(feats)))
    a = np.empty(len(rows), dtype=np.int64)
    y = np.empty(len(rows), dtype=np.int64)
    p_col, t_col = schema.protected_name, schema.target_name
    for r, (line, row) in enumerate(rows):
        for k, name in enumerate(feats):
            X[r, k] = _parse_float(row[pos[name]], line, name)
        a[r] = _parse_binary(row[pos[p_col]], line, p_col)
        y[r] = _parse_binary(row[pos[t_col]], line, t_col)
    return Dataset(X=X, a=a, y=y, schema=schema)


def _fmt(v) -> str:
    return repr(float(v))


def write_csv(path: str | Path, data: Dataset) -> None:
    """Write ``data`` in schema column order; floats use round-trip repr."""
    schema = data.schema
    feats = {name: k for k, name in enumerate(schema.feature_names)}
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(schema.names)
        for i in range(data.n):
            row = []
            for c in schema.columns:
                if c.role is Role.FEATURE:
                    row.append(_fmt(data.X[i, feats[c.name]]))
                elif c.role is Role.PROTECTED:
                    row.append(str(int(data.a[i])))
                else:
                    row.append(str(int(data.y[i])))
            w.writerow(row)


# ---------------------------------------------------------------- scaling


def fit_scaling(train: Dataset) -> ScalingParams:
    if train.n < 2:
        raise DataError("need at least two training rows to estimate scale")
    s = train.X.std(axis=0, ddof=1)
    for k, sk in enumerate(s):
        if not sk > 0:
            raise DataError(f"feature column {train.schema.feature_names[k]!r} is constant on the training set")
    return ScalingParams(s)


def apply_scaling(data: Dataset, scaling: ScalingParams) -> Dataset:
    """Divide each feature by its scale; no centring."""
    if scaling.s.shape != (data.d,):
        raise DataError(f"scaling has {scaling.s.shape[0]} entries, data has {data.d} features")
    return Dataset(X=data.X / scaling.s, a=data.a, y=data.y, schema=data.schema, score=data.score)


# ---------------------------------------------------------------- splitting


def split_sizes(n: int, fractions: Sequence[float]) -> list[int]:
    fractions = [float(f) for f in fractions]
    if any(f <= 0 for f in fractions) or not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise DataError(f"split fractions must be positive and sum to 1, got {fractions}")
    tail = [int(round(n * f)) for f in fractions[1:]]
    sizes = [n - sum(tail)] + tail
    if any(s <= 0 for s in sizes):
        raise DataError(f"split of {n} rows by {fractions} leaves an empty part: {sizes}")
    return sizes


def split(data: Dataset, fractions: Sequence[float] = (0.64, 0.16, 0.2), seed: int = 0) -> tuple[Dataset, ...]:
    """Uniform random disjoint partition into (train, val, test)."""
    sizes = split_sizes(data.n, fractions)
    perm = np.random.default_rng(seed).permutation(data.n)
    bounds = np.cumsum([0] + sizes)
    return tuple(data.subset(np.sort(perm[lo:hi])) for lo, hi in zip(bounds[:-1], bounds[1:]))


# ---------------------------------------------------------------- synthetic data

FIG1_SCHEMA = DatasetSchema(
    (
        Column("x", Role.FEATURE, MonotonicityTag.NONDECREASING),
        Column("a", Role.PROTECTED),
        Column("y", Role.TARGET),
    )
)

FIG1_P_MAJORITY = 0.6
FIG1_SD = {0: 1.0, 1: 3.0}
FIG1_NOISE_SD = 0.1
FIG1_CUTOFF = 1.0


def synth_fig1(n: int, seed: int = 0, y_cutoff: float | None = FIG1_CUTOFF) -> Dataset:
    """Two-group score data: majority (a=1) is wider than minority (a=0).

    The continuous score ``S = X + eps`` is kept in ``Dataset.score``.
    The binary label is ``S > y_cutoff``; pass ``None`` to cut at the
    sample median instead.
    """
    if n < 1:
        raise DataError("n must be at least 1")
    rng = np.random.default_rng(seed)
    a = (rng.random(n) < FIG1_P_MAJORITY).astype(np.int64)
    sd = np.where(a == 1, FIG1_SD[1], FIG1_SD[0])
    x = rng.standard_normal(n) * sd
    s = x + rng.standard_normal(n) * FIG1_NOISE_SD
    cut = float(np.median(s)) if y_cutoff is None else y_cutoff
    y = (s > cut).astype(np.int64)
    return Dataset(X=x[:, None], a=a, y=y, schema=FIG1_SCHEMA, score=s)


class SurfaceKind(str, Enum):
    SINCLAMP = "sinclamp"
    SUMSQUARES = "sumsquares"


SURFACE_DOMAIN = (-2.0, 2.0)

SURFACE_SCHEMA = DatasetSchema(
    (
        Column("x1", Role.FEATURE, MonotonicityTag.NONE),
        Column("x2", Role.FEATURE, MonotonicityTag.NONDECREASING),
        Column("f", Role.TARGET),
    )
)


def surface_value(which: SurfaceKind | str, x1, x2):
    which = SurfaceKind(which)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if which is SurfaceKind.SINCLAMP:
        return np.sin(np.pi * x1) + np.clip(x2, -1.0, 1.0)
    return x1**2 + x2**2


@dataclass
class SurfaceTable:
    """Noiseless regression sample (x1, x2, f)."""

    X: np.ndarray
    f: np.ndarray
    which: SurfaceKind | None = None
    schema: DatasetSchema = field(default=SURFACE_SCHEMA)


def synth_surface(which: SurfaceKind | str, n: int, seed: int = 0) -> SurfaceTable:
    if n < 1:
        raise DataError("n must be at least 1")
    which = SurfaceKind(which)
    rng = np.random.default_rng(seed)
    X = rng.uniform(*SURFACE_DOMAIN, size=(n, 2))
    return SurfaceTable(X=X, f=surface_value(which, X[:, 0], X[:, 1]), which=which)


def write_surface_csv(path: str | Path, table: SurfaceTable) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.schema.names)
        for (x1, x2), f in zip(table.X, table.f):
            w.writerow([_fmt(x1), _fmt(x2), _fmt(f)])


def load_surface_csv(path: str | Path, schema: DatasetSchema = SURFACE_SCHEMA) -> SurfaceTable:
    path = Path(path)
    header, rows = _read_rows(path, schema)
    X = np.array([[_parse_float(r[0], ln, header[0]), _parse_float(r[1], ln, header[1])] for ln, r in rows])
    f = np.array([_parse_float(r[2], ln, header[2]) for ln, r in rows])
    return SurfaceTable(X=X.reshape(-1, 2), f=f, schema=schema)
