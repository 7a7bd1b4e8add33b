"""Missing-data imputation.

Simple column statistics (mean/median/most_frequent), iterative chained
equations (ridge per column), and an automated variant that picks the best of
four candidate models per column by 2-fold cross-validation on that column's
observed cells, re-selected every round.

Iterative methods initialize missing cells with the column mean (numeric) or
mode and then cycle columns in descending missingness order, regressing each
on all the others, until the largest standardized change of any imputed
numeric cell drops below tol or max_rounds is reached. Categorical and binary
columns are imputed by the candidate classifier's argmax, never by sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AllMissingColumn, SchemaMismatch
from .learners import linear, neighbors, trees
from .tabular import ColumnSchema, Dataset

METHODS = ("mean", "median", "most_frequent", "iterative", "auto", "none")
CANDIDATES = ("column_mean", "ridge_linear", "knn", "tree")

_RIDGE_L2 = 1e-3
_KNN_K = 5
_TREE_DEPTH = 4
_TREE_MIN_LEAF = 5


@dataclass(frozen=True)
class ImputerConfig:
    method: str = "iterative"
    max_rounds: int = 10
    tol: float = 1e-3
    candidate_models: tuple[str, ...] = CANDIDATES

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown imputation method {self.method!r}")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        object.__setattr__(self, "candidate_models", tuple(self.candidate_models))
        if self.method == "auto" and not self.candidate_models:
            raise ValueError("auto needs at least one candidate model")
        for c in self.candidate_models:
            if c not in CANDIDATES:
                raise ValueError(f"unknown candidate model {c!r}")


@dataclass
class FittedImputer:
    config: ImputerConfig
    schema: list[ColumnSchema]
    fills: np.ndarray           # per-column init statistic
    sds: np.ndarray             # observed-cell sd per column (tol scaling)
    visit_order: list[int]      # columns revisited by iterative passes
    column_models: dict = field(default_factory=dict)   # col -> model spec
    selected: dict = field(default_factory=dict)        # col -> candidate name
    rounds_run: int = 0
    converged: bool = True
    last_change: float = 0.0  # final-round max standardized numeric change


def _n_levels(col: ColumnSchema) -> int:
    if col.kind == "binary":
        return 2
    if col.kind == "categorical":
        return len(col.categories or ())
    return 0


def _mode(values: np.ndarray) -> float:
    """Most frequent value; ties break toward the smallest value."""
    uniq, counts = np.unique(values, return_counts=True)
    return float(uniq[np.argmax(counts)])


def _init_fill(col: ColumnSchema, observed: np.ndarray, method: str) -> float:
    if col.kind == "numeric":
        if method == "median":
            return float(np.median(observed))
        if method == "most_frequent":
            return _mode(observed)
        return float(observed.mean())
    return _mode(observed)  # discrete columns always take the mode


def _expand_others(work: np.ndarray, schema: list[ColumnSchema], skip: int) -> np.ndarray:
    """Predictor matrix for one column: every other column, one-hot expanded."""
    cols = []
    for j, c in enumerate(schema):
        if j == skip:
            continue
        if c.kind == "categorical":
            k = _n_levels(c)
            block = np.zeros((work.shape[0], k))
            block[np.arange(work.shape[0]), work[:, j].astype(int)] = 1.0
            cols.append(block)
        else:
            cols.append(work[:, j:j + 1])
    if not cols:
        return np.zeros((work.shape[0], 0))
    return np.hstack(cols)


# -- per-column candidate models -----------------------------------------------

def _fit_column_model(kind: str, col: ColumnSchema, F: np.ndarray,
                      y: np.ndarray) -> dict:
    levels = _n_levels(col)
    if kind == "column_mean":
        value = float(y.mean()) if levels == 0 else _mode(y)
        return {"kind": "const", "value": value}
    if levels == 0:
        if kind == "ridge_linear":
            return {"kind": "ridge", **linear.fit_ridge(F, y, _RIDGE_L2)}
        if kind == "knn":
            return {"kind": "knn", **neighbors.fit_knn(F, y, _KNN_K)}
        tree = trees.fit_decision_tree(F, y, _TREE_DEPTH, _TREE_MIN_LEAF)["tree"]
        return {"kind": "tree", "tree": tree}
    # discrete target: one-vs-rest scores, prediction is the argmax level
    per_level = []
    for lvl in range(levels):
        y_l = (y == lvl).astype(np.float64)
        if kind == "ridge_linear":
            per_level.append(linear.fit_ridge(F, y_l, _RIDGE_L2)["params"])
        elif kind == "knn":
            per_level.append(neighbors.fit_knn(F, y_l, _KNN_K))
        else:
            per_level.append(trees.fit_decision_tree(F, y_l, _TREE_DEPTH,
                                                     _TREE_MIN_LEAF)["tree"])
    return {"kind": f"{'ridge' if kind == 'ridge_linear' else kind}_ovr",
            "models": per_level}


def _predict_column_model(model: dict, F: np.ndarray) -> np.ndarray:
    kind = model["kind"]
    if kind == "const":
        return np.full(F.shape[0], model["value"])
    if kind == "ridge":
        return linear.predict_ridge(model, F)
    if kind == "knn":
        return neighbors.predict_knn(model, F)
    if kind == "tree":
        return trees.predict_tree(model["tree"], F)
    # one-vs-rest argmax
    scores = []
    for m in model["models"]:
        if kind == "ridge_ovr":
            scores.append(linear.predict_ridge({"params": m}, F))
        elif kind == "knn_ovr":
            scores.append(neighbors.predict_knn(m, F))
        else:
            scores.append(trees.predict_tree(m, F))
    return np.argmax(np.stack(scores, axis=1), axis=1).astype(np.float64)


def _cv_error(kind: str, col: ColumnSchema, F: np.ndarray, y: np.ndarray,
              rng: np.random.Generator) -> float:
    n = len(y)
    if n < 4:
        # too little signal to cross-validate; constant model wins by default
        return 0.0 if kind == "column_mean" else np.inf
    halves = rng.permutation(n) % 2
    errs = []
    for half in (0, 1):
        tr, te = halves != half, halves == half
        model = _fit_column_model(kind, col, F[tr], y[tr])
        pred = _predict_column_model(model, F[te])
        if _n_levels(col) == 0:
            errs.append(float(np.sqrt(np.mean((pred - y[te]) ** 2))))
        else:
            errs.append(float(np.mean(pred != y[te])))
    return float(np.mean(errs))


# -- fit / transform -------------------------------------------------------------

def fit_imputer(train: Dataset, cfg: ImputerConfig, seed: int) -> FittedImputer:
    n, c = train.values.shape
    fills = np.zeros(c)
    sds = np.zeros(c)
    for j, col in enumerate(train.schema):
        obs = train.values[~train.missing_mask[:, j], j]
        if len(obs) == 0:
            raise AllMissingColumn(col.name)
        fills[j] = _init_fill(col, obs, cfg.method)
        sds[j] = obs.std() if col.kind == "numeric" else 0.0
    imp = FittedImputer(config=cfg, schema=list(train.schema),
                        fills=fills, sds=sds, visit_order=[])
    if cfg.method in ("mean", "median", "most_frequent", "none"):
        return imp

    miss_frac = train.missing_mask.mean(axis=0)
    imp.visit_order = sorted(
        (j for j in range(c) if miss_frac[j] > 0),
        key=lambda j: (-miss_frac[j], j))
    if not imp.visit_order:
        return imp

    work = train.values.copy()
    mask = train.missing_mask
    for j in range(c):
        work[mask[:, j], j] = fills[j]

    numeric_missing = [j for j in imp.visit_order if train.schema[j].kind == "numeric"]
    imp.converged = False
    for rnd in range(cfg.max_rounds):
        imp.rounds_run = rnd + 1
        before = {j: work[mask[:, j], j].copy() for j in numeric_missing}
        for j in imp.visit_order:
            col = train.schema[j]
            obs_rows = ~mask[:, j]
            F = _expand_others(work, train.schema, j)
            y = work[:, j]
            if cfg.method == "auto":
                rng = np.random.default_rng([seed, rnd, j])
                errors = [
                    _cv_error(cand, col, F[obs_rows], y[obs_rows], rng)
                    for cand in cfg.candidate_models
                ]
                choice = cfg.candidate_models[int(np.argmin(errors))]
            else:
                choice = "ridge_linear"
            model = _fit_column_model(choice, col, F[obs_rows], y[obs_rows])
            imp.column_models[j] = model
            imp.selected[j] = choice
            pred = _predict_column_model(model, F[mask[:, j]])
            if col.kind == "numeric":
                work[mask[:, j], j] = pred
            else:
                work[mask[:, j], j] = np.clip(
                    np.round(pred), 0, max(_n_levels(col) - 1, 1))
        change = 0.0
        for j in numeric_missing:
            scale = sds[j] if sds[j] > 0 else 1.0
            delta = np.abs(work[mask[:, j], j] - before[j]) / scale
            if len(delta):
                change = max(change, float(delta.max()))
        imp.last_change = change
        if change < cfg.tol:
            imp.converged = True
            break
    return imp


def _check_compatible(schema_a: list[ColumnSchema], schema_b: list[ColumnSchema]) -> None:
    if len(schema_a) != len(schema_b):
        raise SchemaMismatch("column counts differ")
    for a, b in zip(schema_a, schema_b):
        if (a.name, a.kind, a.categories) != (b.name, b.kind, b.categories):
            raise SchemaMismatch(f"column {a.name!r} differs from training schema")


def transform(imp: FittedImputer, d: Dataset) -> Dataset:
    """Fill every missing cell; observed cells pass through untouched.

    The `none` method is the identity and keeps the mask as-is; all other
    methods return a dataset whose mask is entirely false.
    """
    _check_compatible(imp.schema, d.schema)
    if imp.config.method == "none":
        return Dataset(schema=list(d.schema), values=d.values.copy(),
                       missing_mask=d.missing_mask.copy())
    mask = d.missing_mask
    work = d.values.copy()
    for j in range(work.shape[1]):
        work[mask[:, j], j] = imp.fills[j]
    if imp.config.method in ("iterative", "auto"):
        for _ in range(max(imp.rounds_run, 1) if imp.visit_order else 0):
            for j in imp.visit_order:
                rows = mask[:, j]
                if not rows.any():
                    continue
                model = imp.column_models.get(j)
                if model is None:
                    continue
                F = _expand_others(work, imp.schema, j)
                pred = _predict_column_model(model, F[rows])
                col = imp.schema[j]
                if col.kind == "numeric":
                    work[rows, j] = pred
                else:
                    work[rows, j] = np.clip(
                        np.round(pred), 0, max(_n_levels(col) - 1, 1))
    return Dataset(schema=list(d.schema), values=work,
                   missing_mask=np.zeros_like(mask))


def repeated_impute(train: Dataset, cfg: ImputerConfig, r: int,
                    base_seed: int) -> list[Dataset]:
    """r complete datasets from seeds base_seed .. base_seed + r - 1."""
    if r < 1:
        raise ValueError("r must be >= 1")
    out = []
    for i in range(r):
        imp = fit_imputer(train, cfg, base_seed + i)
        out.append(transform(imp, train))
    return out


# -- serialization -----------------------------------------------------------------

def _model_to_dict(model: dict) -> dict:
    out = {}
    for k, v in model.items():
        if isinstance(v, trees.Tree):
            out[k] = {"__tree__": v.to_dict()}
        elif isinstance(v, np.ndarray):
            out[k] = v.tolist()
        elif k == "models":
            ser = []
            for m in v:
                if isinstance(m, trees.Tree):
                    ser.append({"__tree__": m.to_dict()})
                elif isinstance(m, np.ndarray):
                    ser.append(m.tolist())
                else:
                    ser.append({kk: (vv.tolist() if isinstance(vv, np.ndarray) else vv)
                                for kk, vv in m.items()})
            out[k] = ser
        else:
            out[k] = v
    return out


def _model_from_dict(d: dict) -> dict:
    kind = d["kind"]
    out = dict(d)
    if kind == "tree":
        out["tree"] = trees.Tree.from_dict(d["tree"]["__tree__"])
    elif kind == "ridge":
        out["params"] = np.asarray(d["params"], dtype=np.float64)
    elif kind == "knn":
        out["X"] = np.asarray(d["X"], dtype=np.float64)
        out["y"] = np.asarray(d["y"], dtype=np.float64)
    elif kind.endswith("_ovr"):
        models = []
        for m in d["models"]:
            if isinstance(m, dict) and "__tree__" in m:
                models.append(trees.Tree.from_dict(m["__tree__"]))
            elif isinstance(m, list):
                models.append(np.asarray(m, dtype=np.float64))
            else:
                models.append({kk: (np.asarray(vv, dtype=np.float64)
                                    if kk in ("X", "y") else vv)
                               for kk, vv in m.items()})
        out["models"] = models
    return out


def imputer_to_dict(imp: FittedImputer) -> dict:
    return {
        "config": {"method": imp.config.method, "max_rounds": imp.config.max_rounds,
                   "tol": imp.config.tol,
                   "candidate_models": list(imp.config.candidate_models)},
        "fills": imp.fills.tolist(),
        "sds": imp.sds.tolist(),
        "visit_order": list(imp.visit_order),
        "rounds_run": imp.rounds_run,
        "converged": imp.converged,
        "selected": {str(k): v for k, v in imp.selected.items()},
        "column_models": {str(k): _model_to_dict(v)
                          for k, v in imp.column_models.items()},
    }


def imputer_from_dict(d: dict, schema: list[ColumnSchema]) -> FittedImputer:
    cfg = ImputerConfig(
        method=d["config"]["method"], max_rounds=d["config"]["max_rounds"],
        tol=d["config"]["tol"],
        candidate_models=tuple(d["config"]["candidate_models"]))
    return FittedImputer(
        config=cfg, schema=list(schema),
        fills=np.asarray(d["fills"], dtype=np.float64),
        sds=np.asarray(d["sds"], dtype=np.float64),
        visit_order=list(d["visit_order"]),
        column_models={int(k): _model_from_dict(v)
                       for k, v in d["column_models"].items()},
        selected={int(k): v for k, v in d["selected"].items()},
        rounds_run=d["rounds_run"], converged=d["converged"],
    )
