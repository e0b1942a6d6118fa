"""Shipped schemas for the public benchmark datasets and raw-file converters.

Nothing here downloads data. Each ``prepare_*`` function reads the raw file
as distributed by its publisher and writes a numeric CSV whose header
matches the corresponding packaged schema. See ``docs/datasets.md``.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .data import Column, Dataset, DatasetSchema, MonotonicityTag, Role, write_csv
from .errors import DataError

ND, NI, FREE = MonotonicityTag.NONDECREASING, MonotonicityTag.NONINCREASING, MonotonicityTag.NONE


def _feature(name, tag=FREE):
    return Column(name, Role.FEATURE, tag)


# ---------------------------------------------------------------- law school

LAW_ZFYA_CUTOFF = 0.09


def law_school_schema() -> DatasetSchema:
    return DatasetSchema(
        (
            _feature("ugpa", ND),
            _feature("lsat", ND),
            Column("male", Role.PROTECTED),
            Column("zfya_high", Role.TARGET),
        )
    )


# ---------------------------------------------------------------- COMPAS

COMPAS_PRIORS = ("priors_count", "juv_fel_count", "juv_misd_count", "juv_other_count")


def compas_schema() -> DatasetSchema:
    return DatasetSchema(
        (
            _feature("age"),
            *(_feature(c, ND) for c in COMPAS_PRIORS),
            Column("african_american", Role.PROTECTED),
            Column("two_year_recid", Role.TARGET),
        )
    )


# ---------------------------------------------------------------- German credit

# Ordered codes for the seven monotone attributes. Levels that do not fit
# the order (no account, unknown savings, ...) map to the lowest rank and
# get their own unconstrained indicator column.
GERMAN_ORDINALS = {
    "checking_balance": (0, {"A11": 1, "A12": 2, "A13": 3, "A14": 0}),
    "credit_history": (2, {"A34": 0, "A33": 1, "A32": 2, "A31": 3, "A30": 0}),
    "savings_balance": (5, {"A61": 1, "A62": 2, "A63": 3, "A64": 4, "A65": 0}),
    "employment_tenure": (6, {"A71": 0, "A72": 1, "A73": 2, "A74": 3, "A75": 4}),
}
GERMAN_NUMERIC_MONOTONE = {"duration_months": 1, "credit_amount": 4, "installment_rate_pct": 7}
GERMAN_INDICATORS = {
    "no_checking_account": (0, "A14"),
    "no_credits_taken": (2, "A30"),
    "savings_unknown": (5, "A65"),
    "unemployed": (6, "A71"),
}
# (raw attribute index, prefix, levels observed in the public file)
GERMAN_ONE_HOT = (
    (3, "purpose", ("A40", "A41", "A410", "A42", "A43", "A44", "A45", "A46", "A48", "A49")),
    (8, "personal_status", ("A91", "A92", "A93", "A94")),
    (9, "other_debtors", ("A101", "A102", "A103")),
    (10, "residence_years", ("1", "2", "3", "4")),
    (11, "property", ("A121", "A122", "A123", "A124")),
    (13, "other_installment_plans", ("A141", "A142", "A143")),
    (14, "housing", ("A151", "A152", "A153")),
    (15, "existing_credits", ("1", "2", "3", "4")),
    (16, "job", ("A171", "A172", "A173", "A174")),
    (17, "dependents", ("1", "2")),
    (18, "telephone", ("A191", "A192")),
    (19, "foreign_worker", ("A201", "A202")),
)
GERMAN_RAW_COUNTS = {"residence_years_n": 10, "existing_credits_n": 15}
GERMAN_AGE_INDEX, GERMAN_CLASS_INDEX = 12, 20
GERMAN_AGE_CUTOFF = 25


def german_credit_schema() -> DatasetSchema:
    cols = [
        _feature("checking_balance", ND),
        _feature("credit_history", ND),
        _feature("employment_tenure", ND),
        _feature("savings_balance", ND),
        _feature("installment_rate_pct", NI),
        _feature("duration_months", NI),
        _feature("credit_amount", NI),
    ]
    cols += [_feature(name) for name in GERMAN_INDICATORS]
    cols += [_feature(f"{prefix}_{level}") for _, prefix, levels in GERMAN_ONE_HOT for level in levels]
    cols += [_feature(name) for name in GERMAN_RAW_COUNTS]
    cols += [Column("age_over_25", Role.PROTECTED), Column("good_credit", Role.TARGET)]
    return DatasetSchema(tuple(cols))


SCHEMA_BUILDERS = {
    "law_school": law_school_schema,
    "compas": compas_schema,
    "german_credit": german_credit_schema,
}


# ---------------------------------------------------------------- converters


def _read_rows(path: Path, delimiter: str = ",", header: bool = True):
    if not path.is_file():
        raise DataError(f"raw file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        if header:
            return list(csv.DictReader(fh, delimiter=delimiter))
        if delimiter == " ":
            return [line.split() for line in fh if line.strip()]
        return [row for row in csv.reader(fh, delimiter=delimiter) if row]


def _need(rows: list[dict], path: Path, columns) -> None:
    if not rows:
        raise DataError(f"{path}: no data rows")
    missing = [c for c in columns if c not in rows[0]]
    if missing:
        raise DataError(f"{path}: missing columns {missing}")


def _float(value: str, path: Path, line: int, column: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise DataError(f"{path}:{line}: column {column!r}: non-numeric value {value!r}") from None


def _finish(name: str, X, a, y, out_dir: Path) -> tuple[Path, Path]:
    schema = SCHEMA_BUILDERS[name]()
    data = Dataset(np.asarray(X, float), np.asarray(a, np.int64), np.asarray(y, np.int64), schema)
    out_dir = Path(out_dir)
    csv_path, schema_path = out_dir / f"{name}.csv", out_dir / f"{name}.schema.json"
    write_csv(csv_path, data)
    schema.save(schema_path)
    return csv_path, schema_path


def prepare_law_school(raw: str | Path, out_dir: str | Path) -> tuple[Path, Path]:
    """Convert the LSAC-derived ``law_data.csv`` (columns sex, LSAT, UGPA, ZFYA).

    ``sex`` uses 1 for female and 2 for male. Rows with UGPA 0 are dropped.
    """
    raw = Path(raw)
    rows = _read_rows(raw)
    _need(rows, raw, ("sex", "LSAT", "UGPA", "ZFYA"))
    X, a, y = [], [], []
    for line, r in enumerate(rows, start=2):
        ugpa = _float(r["UGPA"], raw, line, "UGPA")
        if ugpa == 0.0:
            continue
        X.append((ugpa, _float(r["LSAT"], raw, line, "LSAT")))
        a.append(int(_float(r["sex"], raw, line, "sex") == 2))
        y.append(int(_float(r["ZFYA"], raw, line, "ZFYA") >= LAW_ZFYA_CUTOFF))
    return _finish("law_school", X, a, y, out_dir)


def prepare_compas(raw: str | Path, out_dir: str | Path) -> tuple[Path, Path]:
    """Convert ``compas-scores-two-years.csv`` with the usual screening filters.

    Kept rows have the arrest within 30 days of screening, a known
    recidivism flag, a non-ordinary charge degree and a score text.
    """
    raw = Path(raw)
    rows = _read_rows(raw)
    _need(rows, raw, ("age", "race", "two_year_recid", *COMPAS_PRIORS))
    X, a, y = [], [], []
    for line, r in enumerate(rows, start=2):
        gap = r.get("days_b_screening_arrest", "")
        if "days_b_screening_arrest" in r and (
            gap == "" or abs(_float(gap, raw, line, "days_b_screening_arrest")) > 30
        ):
            continue
        if r.get("is_recid") == "-1" or r.get("c_charge_degree") == "O" or r.get("score_text") == "N/A":
            continue
        X.append([_float(r[c], raw, line, c) for c in ("age", *COMPAS_PRIORS)])
        a.append(int(r["race"] == "African-American"))
        y.append(int(_float(r["two_year_recid"], raw, line, "two_year_recid")))
    return _finish("compas", X, a, y, out_dir)


def german_row(fields: list[str]) -> tuple[list[float], int, int]:
    """Encode one 21-field row of ``german.data`` as (features, age flag, good credit)."""
    feats = {}
    for name, (idx, codes) in GERMAN_ORDINALS.items():
        if fields[idx] not in codes:
            raise DataError(f"unknown code {fields[idx]!r} for {name}")
        feats[name] = codes[fields[idx]]
    for name, idx in GERMAN_NUMERIC_MONOTONE.items():
        feats[name] = float(fields[idx])
    row = [feats[c.name] for c in german_credit_schema().features[:7]]
    row += [float(fields[idx] == code) for idx, code in GERMAN_INDICATORS.values()]
    for idx, _, levels in GERMAN_ONE_HOT:
        row += [float(fields[idx] == level) for level in levels]
    row += [float(fields[idx]) for idx in GERMAN_RAW_COUNTS.values()]
    age = int(float(fields[GERMAN_AGE_INDEX]) > GERMAN_AGE_CUTOFF)
    good = int(fields[GERMAN_CLASS_INDEX] == "1")
    return row, age, good


def prepare_german_credit(raw: str | Path, out_dir: str | Path) -> tuple[Path, Path]:
    """Convert the space-separated UCI ``german.data`` (20 attributes plus class)."""
    raw = Path(raw)
    rows = _read_rows(raw, delimiter=" ", header=False)
    if not rows:
        raise DataError(f"{raw}: no data rows")
    X, a, y = [], [], []
    for line, fields in enumerate(rows, start=1):
        if len(fields) != 21:
            raise DataError(f"{raw}:{line}: expected 21 fields, got {len(fields)}")
        try:
            row, age, good = german_row(fields)
        except (DataError, ValueError) as exc:
            raise DataError(f"{raw}:{line}: {exc}") from None
        X.append(row)
        a.append(age)
        y.append(good)
    return _finish("german_credit", X, a, y, out_dir)


PREPARERS = {
    "law_school": prepare_law_school,
    "compas": prepare_compas,
    "german_credit": prepare_german_credit,
}
