"""Shared synthetic-data builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from riskstudio.tabular import ColumnSchema, Dataset


def numeric_schema(n_features: int, target: str | None = "y",
                   survival: bool = False) -> list[ColumnSchema]:
    cols = [ColumnSchema(f"x{i}", "numeric") for i in range(n_features)]
    if survival:
        cols += [ColumnSchema("time", "numeric", role="time"),
                 ColumnSchema("event", "binary", role="event")]
    elif target is not None:
        cols.append(ColumnSchema(target, "binary", role="target"))
    return cols


def classification_dataset(n: int = 200, p: int = 3, seed: int = 0,
                           noise: float = 0.0) -> Dataset:
    """Linearly separable-ish binary data; y = 1[x0 + 0.5 x1 > 0] with optional
    label flips."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(float)
    if noise > 0:
        flips = rng.random(n) < noise
        y[flips] = 1 - y[flips]
    values = np.hstack([X, y[:, None]])
    return Dataset(schema=numeric_schema(p),
                   values=values, missing_mask=np.zeros_like(values, dtype=bool))


def regression_dataset(n: int = 200, p: int = 3, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = X[:, 0] * 2.0 - X[:, 1] + 0.1 * rng.normal(size=n)
    cols = [ColumnSchema(f"x{i}", "numeric") for i in range(p)]
    cols.append(ColumnSchema("y", "numeric", role="target"))
    values = np.hstack([X, y[:, None]])
    return Dataset(schema=cols, values=values,
                   missing_mask=np.zeros_like(values, dtype=bool))


def survival_arrays(n: int = 500, beta=(0.8, -0.5), censor_frac: float = 0.3,
                    seed: int = 0, baseline: float = 0.1):
    """Exponential proportional-hazards data with roughly the asked censoring."""
    rng = np.random.default_rng(seed)
    beta = np.asarray(beta, dtype=np.float64)
    X = rng.normal(size=(n, len(beta)))
    T = -np.log(rng.random(n)) / (baseline * np.exp(X @ beta))
    if censor_frac > 0:
        # exponential censoring scaled to land near the requested fraction
        C = rng.exponential(scale=np.quantile(T, 0.8) * 1.35, size=n)
    else:
        C = np.full(n, np.inf)
    times = np.minimum(T, C)
    events = (T <= C).astype(float)
    return X, times, events, T


def survival_dataset(n: int = 500, beta=(0.8, -0.5), seed: int = 0) -> Dataset:
    X, times, events, _ = survival_arrays(n=n, beta=beta, seed=seed)
    cols = numeric_schema(len(beta), survival=True)
    values = np.hstack([X, times[:, None], events[:, None]])
    return Dataset(schema=cols, values=values,
                   missing_mask=np.zeros_like(values, dtype=bool))


def mask_mcar(d: Dataset, frac: float, seed: int, columns=None) -> Dataset:
    """Return a copy with `frac` of the chosen feature cells masked MCAR."""
    rng = np.random.default_rng(seed)
    mask = d.missing_mask.copy()
    cols = columns if columns is not None else [
        j for j, c in enumerate(d.schema) if c.role == "feature"]
    for j in cols:
        hit = rng.random(d.n_rows) < frac
        # never mask out an entire column
        if hit.all():
            hit[rng.integers(d.n_rows)] = False
        mask[hit, j] = True
    return Dataset(schema=list(d.schema), values=d.values.copy(), missing_mask=mask)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def mixed_dataset(n: int = 120, seed: int = 0, missing: float = 0.1) -> Dataset:
    """Binary target, two numeric + one binary + one categorical feature,
    with some MCAR missingness; exercises one-hot and imputation paths."""
    rng = np.random.default_rng(seed)
    x0 = rng.normal(size=n)
    x1 = rng.normal(size=n)
    flag = (rng.random(n) < 0.4).astype(float)
    cat = rng.integers(0, 3, size=n).astype(float)
    y = (x0 + 0.8 * flag + 0.3 * (cat == 2) > 0.2).astype(float)
    schema = [
        ColumnSchema("age", "numeric"),
        ColumnSchema("bmi", "numeric"),
        ColumnSchema("smoker", "binary"),
        ColumnSchema("activity", "categorical", categories=("low", "mid", "high")),
        ColumnSchema("y", "binary", role="target"),
    ]
    values = np.stack([x0 * 10 + 50, x1 * 5 + 25, flag, cat, y], axis=1)
    d = Dataset(schema=schema, values=values,
                missing_mask=np.zeros_like(values, dtype=bool))
    if missing > 0:
        d = mask_mcar(d, missing, seed + 1, columns=[0, 1, 3])
    return d


@pytest.fixture(scope="session")
def tiny_bundle(tmp_path_factory):
    """A small trained study saved to disk, shared across test modules."""
    from riskstudio.bundle import save_study
    from riskstudio.search import build_ensemble, default_space, run_study
    from riskstudio.tabular import TaskSpec

    d = mixed_dataset(n=120, seed=7)
    t = TaskSpec("classification")
    report = run_study(d, t, default_space(t, d.schema), budget=6, k=2, r=1,
                       seed=5, n_init=4, n_cand=30, surrogate_trees=10)
    model = build_ensemble(report, d, m=2)
    out = str(tmp_path_factory.mktemp("bundle") / "study")
    bundle = save_study(report, model, d, out)
    return bundle, d
