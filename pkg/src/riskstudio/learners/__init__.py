"""The model zoo: a uniform fit/predict contract over nine estimator families.

Families and hyperparameter ranges are declared in HYPERPARAM_SPECS; the
search module reads the same registry to build its encoding. Survival targets
are passed as a (times, events) pair, everything else as a plain vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    IncompatibleTask,
    NonDifferentiableFamily,
    NotSurvivalModel,
    ShapeMismatch,
)
from . import linear, naive_bayes, neighbors, survival, trees

# (name, lo, hi, scale, integer)
HYPERPARAM_SPECS: dict[str, list[tuple]] = {
    "logistic": [("l2", 1e-4, 10.0, "log", False), ("iters", 50, 500, "linear", True)],
    "gaussian_nb": [],
    "decision_tree": [("max_depth", 1, 12, "linear", True),
                      ("min_leaf", 1, 50, "linear", True)],
    "random_forest": [("n_trees", 10, 300, "linear", True),
                      ("max_depth", 2, 12, "linear", True),
                      ("feature_frac", 0.3, 1.0, "linear", False)],
    "gradient_boosting": [("rounds", 10, 300, "linear", True),
                          ("rate", 0.01, 0.5, "log", False),
                          ("max_depth", 1, 6, "linear", True)],
    "knn": [("k", 1, 50, "linear", True)],
    "linear_ridge": [("l2", 1e-4, 10.0, "log", False)],
    "cox_ph": [("l2", 0.0, 10.0, "linear", False)],
    "weibull_aft": [("l2", 0.0, 10.0, "linear", False)],
}

FAMILY_TASKS: dict[str, tuple[str, ...]] = {
    "logistic": ("classification",),
    "gaussian_nb": ("classification",),
    "decision_tree": ("classification", "regression"),
    "random_forest": ("classification", "regression"),
    "gradient_boosting": ("classification", "regression"),
    "knn": ("classification", "regression"),
    "linear_ridge": ("regression",),
    "cox_ph": ("survival",),
    "weibull_aft": ("survival",),
}

DEFAULT_HYPERPARAMS: dict[str, dict] = {
    "logistic": {"l2": 1e-2, "iters": 200},
    "gaussian_nb": {},
    "decision_tree": {"max_depth": 6, "min_leaf": 5},
    "random_forest": {"n_trees": 100, "max_depth": 8, "feature_frac": 0.7},
    "gradient_boosting": {"rounds": 100, "rate": 0.1, "max_depth": 3},
    "knn": {"k": 5},
    "linear_ridge": {"l2": 1e-2},
    "cox_ph": {"l2": 0.1},
    "weibull_aft": {"l2": 0.1},
}

DIFFERENTIABLE = ("logistic", "linear_ridge", "cox_ph", "weibull_aft")


@dataclass(frozen=True)
class LearnerConfig:
    family: str
    hyperparams: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in HYPERPARAM_SPECS:
            raise ValueError(f"unknown learner family {self.family!r}")
        merged = dict(DEFAULT_HYPERPARAMS[self.family])
        merged.update(self.hyperparams)
        for name, lo, hi, _scale, is_int in HYPERPARAM_SPECS[self.family]:
            v = merged[name]
            if not lo <= v <= hi:
                raise ValueError(
                    f"{self.family}.{name}={v} outside declared range [{lo}, {hi}]")
            if is_int:
                merged[name] = int(round(v))
        object.__setattr__(self, "hyperparams", merged)


@dataclass
class FittedLearner:
    family: str
    task: str
    n_features: int
    state: dict


def _infer_task(cfg: LearnerConfig, y) -> str:
    if isinstance(y, tuple):
        return "survival"
    tasks = FAMILY_TASKS[cfg.family]
    if tasks == ("survival",):
        raise IncompatibleTask(f"{cfg.family} needs (times, events) targets")
    yv = np.asarray(y, dtype=np.float64)
    binary = np.isin(np.unique(yv), [0.0, 1.0]).all()
    if "classification" in tasks and binary:
        return "classification"
    if "regression" in tasks:
        return "regression"
    raise IncompatibleTask(f"{cfg.family} needs binary labels")


def fit(cfg: LearnerConfig, X, y, seed: int, task: str | None = None) -> FittedLearner:
    """Fit one learner; survival targets are a (times, events) pair.

    When both classification and regression would be legal for a family with
    0/1 targets, classification wins unless `task` says otherwise.
    """
    X = np.asarray(X, dtype=np.float64)
    if np.isnan(X).any():
        raise ValueError("learner inputs must be complete (impute first)")
    task = task or _infer_task(cfg, y)
    if task not in FAMILY_TASKS[cfg.family]:
        raise IncompatibleTask(f"{cfg.family} does not support {task}")
    hp = cfg.hyperparams
    if task == "survival":
        times, events = (np.asarray(v, dtype=np.float64) for v in y)
        if len(times) != X.shape[0] or len(events) != X.shape[0]:
            raise ShapeMismatch("targets and matrix row counts differ")
        if cfg.family == "cox_ph":
            state = survival.fit_cox(X, times, events, hp["l2"])
        else:
            state = survival.fit_weibull_aft(X, times, events, hp["l2"])
        return FittedLearner(cfg.family, task, X.shape[1], state)

    yv = np.asarray(y, dtype=np.float64)
    if len(yv) != X.shape[0]:
        raise ShapeMismatch("targets and matrix row counts differ")
    if task == "classification" and not np.isin(np.unique(yv), [0.0, 1.0]).all():
        raise IncompatibleTask("classification labels must be 0/1")
    if cfg.family == "logistic":
        state = linear.fit_logistic(X, yv, hp["l2"], hp["iters"])
    elif cfg.family == "linear_ridge":
        state = linear.fit_ridge(X, yv, hp["l2"])
    elif cfg.family == "gaussian_nb":
        state = naive_bayes.fit_gaussian_nb(X, yv)
    elif cfg.family == "knn":
        state = neighbors.fit_knn(X, yv, hp["k"])
    elif cfg.family == "decision_tree":
        state = trees.fit_decision_tree(X, yv, hp["max_depth"], hp["min_leaf"])
    elif cfg.family == "random_forest":
        state = trees.fit_random_forest(
            X, yv, hp["n_trees"], hp["max_depth"], hp["feature_frac"], seed)
    elif cfg.family == "gradient_boosting":
        state = trees.fit_gradient_boosting(
            X, yv, hp["rounds"], hp["rate"], hp["max_depth"],
            classification=(task == "classification"),
            subsample=hp.get("subsample", 1.0), seed=seed)
    else:  # pragma: no cover
        raise ValueError(cfg.family)
    return FittedLearner(cfg.family, task, X.shape[1], state)


def predict_score(f: FittedLearner, X) -> np.ndarray:
    """Positive-class probability, regression value, or relative risk."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != f.n_features:
        raise ShapeMismatch(f"expected {f.n_features} features, got {X.shape}")
    if f.family == "logistic":
        return linear.predict_logistic(f.state, X)
    if f.family == "linear_ridge":
        return linear.predict_ridge(f.state, X)
    if f.family == "gaussian_nb":
        return naive_bayes.predict_gaussian_nb(f.state, X)
    if f.family == "knn":
        return neighbors.predict_knn(f.state, X)
    if f.family == "decision_tree":
        return trees.predict_tree(f.state["tree"], X)
    if f.family == "random_forest":
        return trees.predict_forest(f.state, X)
    if f.family == "gradient_boosting":
        return trees.predict_boosting(f.state, X)
    if f.family == "cox_ph":
        return survival.cox_risk(f.state, X)
    if f.family == "weibull_aft":
        return survival.aft_risk(f.state, X)
    raise ValueError(f.family)  # pragma: no cover


def predict_event_prob(f: FittedLearner, X, horizon: float) -> np.ndarray:
    if f.task != "survival":
        raise NotSurvivalModel(f"{f.family} has no event-time distribution")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != f.n_features:
        raise ShapeMismatch(f"expected {f.n_features} features, got {X.shape}")
    if f.family == "cox_ph":
        return survival.cox_event_prob(f.state, X, horizon)
    return survival.aft_event_prob(f.state, X, horizon)


def loss_value(cfg: LearnerConfig, params, X, y) -> float:
    """Training objective for the differentiable families.

    Parameter layouts: logistic/ridge [intercept, weights...]; cox_ph
    [weights...]; weibull_aft [log sigma, mu, weights...].
    """
    _require_differentiable(cfg)
    params = np.asarray(params, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    l2 = cfg.hyperparams["l2"]
    if cfg.family == "logistic":
        return linear.logistic_loss(params, X, np.asarray(y, dtype=np.float64), l2)
    if cfg.family == "linear_ridge":
        return linear.ridge_loss(params, X, np.asarray(y, dtype=np.float64), l2)
    times, events = (np.asarray(v, dtype=np.float64) for v in y)
    if cfg.family == "cox_ph":
        return survival.cox_loss(params, X, times, events, l2)
    return survival.aft_loss(params, X, times, events, l2)


def loss_gradient(cfg: LearnerConfig, params, X, y) -> np.ndarray:
    """Analytic gradient of loss_value at params."""
    _require_differentiable(cfg)
    params = np.asarray(params, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    l2 = cfg.hyperparams["l2"]
    if cfg.family == "logistic":
        return linear.logistic_gradient(params, X, np.asarray(y, dtype=np.float64), l2)
    if cfg.family == "linear_ridge":
        return linear.ridge_gradient(params, X, np.asarray(y, dtype=np.float64), l2)
    times, events = (np.asarray(v, dtype=np.float64) for v in y)
    if cfg.family == "cox_ph":
        return survival.cox_gradient(params, X, times, events, l2)
    return survival.aft_gradient(params, X, times, events, l2)


def _require_differentiable(cfg: LearnerConfig) -> None:
    if cfg.family not in DIFFERENTIABLE:
        raise NonDifferentiableFamily(f"{cfg.family} exposes no analytic gradient")


# -- serialization ---------------------------------------------------------------

def learner_to_dict(f: FittedLearner) -> dict:
    state: dict = {}
    for key, val in f.state.items():
        if key == "tree":
            state[key] = val.to_dict()
        elif key == "trees":
            state[key] = [t.to_dict() for t in val]
        elif key == "features":
            state[key] = [v.tolist() for v in val]
        elif isinstance(val, np.ndarray):
            state[key] = val.tolist()
        else:
            state[key] = val
    return {"family": f.family, "task": f.task,
            "n_features": f.n_features, "state": state}


def learner_from_dict(d: dict) -> FittedLearner:
    family = d["family"]
    state = dict(d["state"])
    if "tree" in state:
        state["tree"] = trees.Tree.from_dict(state["tree"])
    if "trees" in state:
        state["trees"] = [trees.Tree.from_dict(t) for t in state["trees"]]
    if "features" in state:
        state["features"] = [np.asarray(v, dtype=np.int64) for v in state["features"]]
    array_keys = {
        "logistic": ["params"], "linear_ridge": ["params"],
        "gaussian_nb": ["means", "variances", "priors"],
        "knn": ["X", "y"],
        "cox_ph": ["beta", "center", "baseline_times", "baseline_cumhaz"],
        "weibull_aft": ["beta", "center"],
    }
    for key in array_keys.get(family, []):
        state[key] = np.asarray(state[key], dtype=np.float64)
    return FittedLearner(family=family, task=d["task"],
                         n_features=d["n_features"], state=state)
