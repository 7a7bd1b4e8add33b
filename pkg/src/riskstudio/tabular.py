"""Typed tabular datasets with explicit missingness, plus splitting and fold plans.

Cell payloads are stored in a float64 matrix: numeric columns hold raw values,
binary columns hold 0/1, categorical columns hold the index of the level in the
column's category list. A boolean mask of the same shape marks missing cells;
masked payloads are NaN and must never be read.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    CategoryError,
    ParseError,
    SchemaMismatch,
    TooFewRows,
    UnknownColumn,
)

KINDS = ("numeric", "binary", "categorical")
ROLES = ("feature", "target", "time", "event", "ignore")

# Exact missing tokens; anything else unparseable is an error, not missing.
MISSING_TOKENS = ("", "NA")


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str
    role: str = "feature"
    categories: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown column kind {self.kind!r}")
        if self.role not in ROLES:
            raise ValueError(f"unknown column role {self.role!r}")
        if self.kind == "categorical" and self.categories is not None:
            object.__setattr__(self, "categories", tuple(self.categories))
        if self.kind != "categorical" and self.categories:
            raise ValueError(f"column {self.name!r}: only categorical columns take categories")


def _check_schema(schema: list[ColumnSchema]) -> None:
    names = [c.name for c in schema]
    if len(set(names)) != len(names):
        raise ValueError("column names must be unique within a schema")
    if sum(c.role == "target" for c in schema) > 1:
        raise ValueError("at most one target column")
    if sum(c.role == "time" for c in schema) > 1 or sum(c.role == "event" for c in schema) > 1:
        raise ValueError("at most one time and one event column")
    for c in schema:
        if c.role == "event" and c.kind != "binary":
            raise ValueError(f"event column {c.name!r} must be binary")


@dataclass
class Dataset:
    schema: list[ColumnSchema]
    values: np.ndarray       # (n_rows, n_cols) float64; masked cells are NaN
    missing_mask: np.ndarray  # (n_rows, n_cols) bool

    def __post_init__(self):
        _check_schema(self.schema)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.missing_mask = np.asarray(self.missing_mask, dtype=bool)
        if self.values.shape != self.missing_mask.shape:
            raise ValueError("values and missing_mask shapes differ")
        if self.values.shape[1] != len(self.schema):
            raise ValueError("column count does not match schema")
        # a masked payload must never be read; poison it
        self.values = self.values.copy()
        self.values[self.missing_mask] = np.nan

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def column_index(self, name: str) -> int:
        for i, c in enumerate(self.schema):
            if c.name == name:
                return i
        raise UnknownColumn(f"no column named {name!r}")

    def columns_with_role(self, role: str) -> list[int]:
        return [i for i, c in enumerate(self.schema) if c.role == role]

    def single_role_column(self, role: str) -> int:
        idx = self.columns_with_role(role)
        if len(idx) != 1:
            raise SchemaMismatch(f"expected exactly one {role!r} column, found {len(idx)}")
        return idx[0]

    def feature_view(self) -> "Dataset":
        """Dataset restricted to feature-role columns (shares no state)."""
        idx = self.columns_with_role("feature")
        return self.select_columns([self.schema[i].name for i in idx])

    def select_columns(self, names: list[str]) -> "Dataset":
        idx = [self.column_index(n) for n in names]
        return Dataset(
            schema=[self.schema[i] for i in idx],
            values=self.values[:, idx].copy(),
            missing_mask=self.missing_mask[:, idx].copy(),
        )

    def select_rows(self, rows: np.ndarray) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(
            schema=list(self.schema),
            values=self.values[rows].copy(),
            missing_mask=self.missing_mask[rows].copy(),
        )

    def target_vector(self) -> np.ndarray:
        j = self.single_role_column("target")
        col = self.values[:, j]
        if self.missing_mask[:, j].any():
            raise SchemaMismatch("target column contains missing values")
        return col.copy()

    def survival_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        jt = self.single_role_column("time")
        je = self.single_role_column("event")
        if self.missing_mask[:, jt].any() or self.missing_mask[:, je].any():
            raise SchemaMismatch("time/event columns contain missing values")
        return self.values[:, jt].copy(), self.values[:, je].copy()

    def content_hash(self) -> str:
        """SHA-256 over the canonical CSV text plus the schema; stable across runs."""
        h = hashlib.sha256()
        h.update(schema_to_json(self.schema).encode("utf-8"))
        h.update(write_csv_text(self).encode("utf-8"))
        return h.hexdigest()


@dataclass(frozen=True)
class TaskSpec:
    task: str                 # classification | regression | survival
    horizon: float | None = None
    primary_metric: str = ""

    def __post_init__(self):
        if self.task not in ("classification", "regression", "survival"):
            raise ValueError(f"unknown task {self.task!r}")
        default = {"classification": "auroc", "survival": "c_index", "regression": "r_squared"}
        metric = self.primary_metric or default[self.task]
        object.__setattr__(self, "primary_metric", metric)
        if metric != default[self.task]:
            raise ValueError(f"metric {metric!r} incompatible with task {self.task!r}")
        if self.task == "survival":
            if self.horizon is None or not self.horizon > 0:
                raise ValueError("survival tasks need a horizon > 0")


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: np.ndarray  # per-row fold index in [0, k)
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "assignment", np.asarray(self.assignment, dtype=np.int64))
        counts = np.bincount(self.assignment, minlength=self.k)
        if len(counts) != self.k or (counts == 0).any():
            raise ValueError("every fold must be non-empty")
        if self.assignment.min() < 0 or self.assignment.max() >= self.k:
            raise ValueError("fold indices out of range")

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)


# -- parsing -----------------------------------------------------------------

def _parse_cell(token: str, col: ColumnSchema, row: int,
                categories: dict[str, list[str]] | None) -> tuple[float, bool]:
    """Returns (payload, is_missing). `categories` collects inferred levels."""
    if token in MISSING_TOKENS:
        return np.nan, True
    if col.kind == "numeric":
        try:
            v = float(token)
        except ValueError:
            raise ParseError(row, col.name, token) from None
        if not np.isfinite(v):
            raise ParseError(row, col.name, token, "non-finite value")
        if col.role == "time" and v <= 0:
            raise ParseError(row, col.name, token, "durations must be strictly positive")
        return v, False
    if col.kind == "binary":
        if token not in ("0", "1"):
            raise ParseError(row, col.name, token, "binary cells must be 0 or 1")
        return float(token), False
    # categorical
    if col.categories is not None:
        try:
            return float(col.categories.index(token)), False
        except ValueError:
            raise CategoryError(row, col.name, token) from None
    levels = categories[col.name]
    if token not in levels:
        levels.append(token)
    return float(levels.index(token)), False


def load_csv(path: str, schema: list[ColumnSchema]) -> Dataset:
    """Load an RFC-4180 CSV with a mandatory header row against a schema.

    The header must contain exactly the schema's column names (any order).
    Empty string and literal "NA" cells are missing; anything else that does
    not parse for the column kind raises ParseError. Categorical columns with
    fixed categories reject unseen levels; columns without fixed categories
    collect levels in order of first appearance.
    """
    _check_schema(schema)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(0, "", "", "empty file") from None
        by_name = {c.name: c for c in schema}
        if set(header) != set(by_name):
            missing = sorted(set(by_name) - set(header))
            extra = sorted(set(header) - set(by_name))
            raise UnknownColumn(f"header/schema mismatch: missing {missing}, unexpected {extra}")
        cols = [by_name[h] for h in header]
        inferred: dict[str, list[str]] = {
            c.name: [] for c in schema if c.kind == "categorical" and c.categories is None
        }
        values, mask = [], []
        for r, rec in enumerate(reader):
            if len(rec) != len(header):
                raise ParseError(r, "", ",".join(rec), "wrong field count")
            vrow, mrow = [], []
            for tok, col in zip(rec, cols):
                v, m = _parse_cell(tok, col, r, inferred)
                vrow.append(v)
                mrow.append(m)
            values.append(vrow)
            mask.append(mrow)
    n = len(values)
    order = [header.index(c.name) for c in schema]
    vals = np.asarray(values, dtype=np.float64).reshape(n, len(schema))[:, order]
    msk = np.asarray(mask, dtype=bool).reshape(n, len(schema))[:, order]
    final_schema = [
        replace(c, categories=tuple(inferred[c.name])) if c.name in inferred else c
        for c in schema
    ]
    return Dataset(schema=final_schema, values=vals, missing_mask=msk)


def _format_cell(d: Dataset, i: int, j: int) -> str:
    if d.missing_mask[i, j]:
        return ""
    col = d.schema[j]
    v = d.values[i, j]
    if col.kind == "binary":
        return str(int(v))
    if col.kind == "categorical":
        return col.categories[int(v)]
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def write_csv_text(d: Dataset) -> str:
    """Canonical CSV text: floats via repr (shortest round-trip), missing as ''."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([c.name for c in d.schema])
    for i in range(d.n_rows):
        w.writerow([_format_cell(d, i, j) for j in range(d.n_cols)])
    return buf.getvalue()


def write_csv(d: Dataset, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(write_csv_text(d))


# -- schema (de)serialization --------------------------------------------------

def schema_to_json(schema: list[ColumnSchema]) -> str:
    rows = []
    for c in schema:
        row: dict = {"name": c.name, "kind": c.kind, "role": c.role}
        if c.categories is not None:
            row["categories"] = list(c.categories)
        rows.append(row)
    return json.dumps(rows, sort_keys=True, separators=(",", ":"))


def schema_from_json(text: str) -> list[ColumnSchema]:
    rows = json.loads(text)
    schema = []
    for row in rows:
        schema.append(ColumnSchema(
            name=row["name"], kind=row["kind"], role=row.get("role", "feature"),
            categories=tuple(row["categories"]) if "categories" in row else None,
        ))
    _check_schema(schema)
    return schema


def load_schema(path: str) -> list[ColumnSchema]:
    with open(path, "r", encoding="utf-8") as fh:
        return schema_from_json(fh.read())


# -- splitting ----------------------------------------------------------------

def _strat_labels(d: Dataset) -> np.ndarray:
    """Binary labels used for stratification: the target if present, else event."""
    targets = d.columns_with_role("target")
    j = targets[0] if targets else d.single_role_column("event")
    col = d.values[:, j]
    if d.missing_mask[:, j].any():
        raise SchemaMismatch("stratification column contains missing values")
    uniq = np.unique(col)
    if not np.isin(uniq, [0.0, 1.0]).all():
        raise SchemaMismatch("stratification needs a binary column")
    return col.astype(np.int64)


def split_holdout(d: Dataset, fraction: float, seed: int,
                  stratify: bool = False) -> tuple[Dataset, Dataset]:
    """Disjoint (train, test) partition with test size round(fraction * n).

    Stratified splits shuffle each class separately, take floor(fraction * n_c)
    from each, then hand out the remaining slots by largest fractional
    remainder (ties broken by class value).
    """
    if not 0 < fraction < 1:
        raise ValueError("fraction must be in (0, 1)")
    n = d.n_rows
    if n < 4:
        raise TooFewRows(f"need at least 4 rows, have {n}")
    n_test = int(round(fraction * n))
    n_test = min(max(n_test, 1), n - 1)
    rng = np.random.default_rng(seed)
    if not stratify:
        perm = rng.permutation(n)
        test = np.sort(perm[:n_test])
    else:
        y = _strat_labels(d)
        picks = []
        quota = n_test
        classes = [0, 1]
        base, rem = {}, {}
        for c in classes:
            nc = int((y == c).sum())
            base[c] = int(np.floor(fraction * nc))
            rem[c] = fraction * nc - base[c]
        short = quota - sum(base.values())
        order = sorted(classes, key=lambda c: (-rem[c], c))
        take = dict(base)
        for c in order[:max(short, 0)]:
            take[c] += 1
        for c in classes:
            rows = np.flatnonzero(y == c)
            perm = rng.permutation(len(rows))
            picks.append(rows[perm[: take[c]]])
        test = np.sort(np.concatenate(picks))
    is_test = np.zeros(n, dtype=bool)
    is_test[test] = True
    return d.select_rows(np.flatnonzero(~is_test)), d.select_rows(test)


def make_folds(d: Dataset, k: int, seed: int, task: TaskSpec) -> FoldPlan:
    """K-fold assignment; classification and survival stratify on the binary
    outcome (event indicator for survival), regression shuffles plainly.

    Rows of each class are shuffled and dealt round-robin; the dealing offset
    carries over between classes so total fold sizes differ by at most one.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    n = d.n_rows
    if n < k:
        raise TooFewRows(f"need at least {k} rows, have {n}")
    rng = np.random.default_rng(seed)
    assignment = np.empty(n, dtype=np.int64)
    if task.task == "regression":
        perm = rng.permutation(n)
        assignment[perm] = np.arange(n) % k
    else:
        y = _strat_labels(d)
        offset = 0
        for c in (0, 1):
            rows = np.flatnonzero(y == c)
            perm = rng.permutation(len(rows))
            assignment[rows[perm]] = (offset + np.arange(len(rows))) % k
            offset = (offset + len(rows)) % k
    return FoldPlan(k=k, assignment=assignment, seed=seed)


# -- one-hot design matrices ---------------------------------------------------

def feature_names_expanded(schema: list[ColumnSchema]) -> list[str]:
    names = []
    for c in schema:
        if c.role != "feature":
            continue
        if c.kind == "categorical":
            cats = c.categories or ()
            names.extend(f"{c.name}={lvl}" for lvl in cats)
        else:
            names.append(c.name)
    return names


def design_matrix(d: Dataset, allow_missing: bool = False) -> np.ndarray:
    """One-hot expand feature columns into a numeric matrix.

    Categorical levels come from the schema, so train and test expansions line
    up. With allow_missing, masked cells produce NaN (all-NaN across a
    categorical's indicator block); otherwise missing cells are an error.
    """
    cols = []
    for j, c in enumerate(d.schema):
        if c.role != "feature":
            continue
        col = d.values[:, j]
        msk = d.missing_mask[:, j]
        if msk.any() and not allow_missing:
            raise SchemaMismatch(f"feature {c.name!r} still has missing cells")
        if c.kind == "categorical":
            cats = c.categories or ()
            block = np.zeros((d.n_rows, len(cats)))
            obs = ~msk
            block[obs, col[obs].astype(int)] = 1.0
            block[msk, :] = np.nan
            cols.append(block)
        else:
            out = col.copy()
            out[msk] = np.nan
            cols.append(out[:, None])
    if not cols:
        return np.zeros((d.n_rows, 0))
    return np.hstack(cols)
