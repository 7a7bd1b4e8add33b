"""The AutoML core: pipeline search space, Bayesian-optimization loop,
repeated-imputation cross-validated objective, and posterior-weighted
ensembling.

A pipeline configuration encodes to a fixed-length vector: one-hot blocks for
the categorical choices plus one unit-scaled slot per hyperparameter, with
inactive conditional slots pinned at 0.5. Continuous slots are quantized to a
1024-point grid so decode(encode(c)) is exact for every config the space can
produce. The surrogate is a bagged ensemble of regression trees whose
across-tree spread provides the uncertainty for expected improvement.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import EmptySpace, TooFewTrials
from .impute import ImputerConfig, fit_imputer, transform
from .learners import (
    FAMILY_TASKS,
    HYPERPARAM_SPECS,
    FittedLearner,
    LearnerConfig,
    fit as fit_learner,
    predict_event_prob,
    predict_score,
)
from .learners.trees import bin_matrix, grow_tree, make_bins, predict_tree
from .metrics import WORST_SCORE, score_metric
from .preprocess import DIMREDS, SCALERS, FittedStage, StageConfig, apply_stage, fit_stage
from .tabular import Dataset, FoldPlan, TaskSpec, design_matrix, feature_names_expanded, make_folds

ENGINE_VERSION = "0.1.0"
GRID = 1023  # continuous slots live on {0, 1/GRID, ..., 1}

IMPUTER_CHOICES = ("mean", "median", "most_frequent", "iterative", "auto")
TASK_FAMILIES = {
    "classification": ("logistic", "gaussian_nb", "decision_tree",
                       "random_forest", "gradient_boosting", "knn"),
    "regression": ("linear_ridge", "decision_tree", "random_forest",
                   "gradient_boosting", "knn"),
    "survival": ("cox_ph", "weibull_aft"),
}
VAR_THRESHOLD_RANGE = (0.0, 0.2)


@dataclass(frozen=True)
class PipelineConfig:
    imputer: ImputerConfig
    stage: StageConfig
    learner: LearnerConfig

    def key(self) -> tuple:
        """Hashable identity used for deduplication."""
        return (
            self.imputer.method, self.imputer.max_rounds, self.imputer.tol,
            self.imputer.candidate_models,
            self.stage.scaler, self.stage.dimred, self.stage.dimred_param,
            self.learner.family, tuple(sorted(self.learner.hyperparams.items())),
        )


@dataclass(frozen=True)
class SearchSpace:
    task: str
    n_features: int
    imputer_methods: tuple[str, ...] = IMPUTER_CHOICES
    scalers: tuple[str, ...] = SCALERS
    dimreds: tuple[str, ...] = DIMREDS
    families: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.families:
            object.__setattr__(self, "families", TASK_FAMILIES[self.task])
        for f in self.families:
            if self.task not in FAMILY_TASKS[f]:
                raise EmptySpace(f"{f} cannot solve {self.task} tasks")
        if self.n_features < 1:
            raise EmptySpace("need at least one feature")

    @property
    def max_components(self) -> int:
        return self.n_features

    def param_slots(self) -> list[tuple]:
        """(family, name, lo, hi, scale, is_int) for every conditional slot."""
        slots = [
            ("__dimred__", "components", 1, self.max_components, "linear", True),
            ("__dimred__", "threshold", *VAR_THRESHOLD_RANGE, "linear", False),
        ]
        for fam in self.families:
            for name, lo, hi, scale, is_int in HYPERPARAM_SPECS[fam]:
                slots.append((fam, name, lo, hi, scale, is_int))
        return slots

    def n_dims(self) -> int:
        return (len(self.imputer_methods) + len(self.scalers) + len(self.dimreds)
                + len(self.families) + len(self.param_slots()))


def _slot_decode(u: float, lo, hi, scale: str, is_int: bool):
    u = min(max(u, 0.0), 1.0)
    if is_int:
        return int(lo + round(u * (hi - lo)))
    g = round(u * GRID) / GRID
    if scale == "log":
        return float(math.exp(math.log(lo) + g * (math.log(hi) - math.log(lo))))
    return float(lo + g * (hi - lo))


def _slot_encode(v, lo, hi, scale: str, is_int: bool) -> float:
    if is_int:
        return (v - lo) / (hi - lo) if hi > lo else 0.0
    if scale == "log":
        t = (math.log(v) - math.log(lo)) / (math.log(hi) - math.log(lo))
    else:
        t = (v - lo) / (hi - lo) if hi > lo else 0.0
    return round(min(max(t, 0.0), 1.0) * GRID) / GRID


def encode_config(space: SearchSpace, c: PipelineConfig) -> np.ndarray:
    vec = []
    for choice, options in ((c.imputer.method, space.imputer_methods),
                            (c.stage.scaler, space.scalers),
                            (c.stage.dimred, space.dimreds),
                            (c.learner.family, space.families)):
        if choice not in options:
            raise EmptySpace(f"{choice!r} is outside this search space")
        vec.extend(1.0 if o == choice else 0.0 for o in options)
    for fam, name, lo, hi, scale, is_int in space.param_slots():
        if fam == "__dimred__":
            if name == "components" and c.stage.dimred == "pca":
                vec.append(_slot_encode(int(c.stage.dimred_param), lo, hi, scale, True))
            elif name == "threshold" and c.stage.dimred == "variance_threshold":
                vec.append(_slot_encode(c.stage.dimred_param, lo, hi, scale, False))
            else:
                vec.append(0.5)
        elif fam == c.learner.family:
            vec.append(_slot_encode(c.learner.hyperparams[name], lo, hi, scale, is_int))
        else:
            vec.append(0.5)
    return np.asarray(vec, dtype=np.float64)


def decode_config(space: SearchSpace, vec: np.ndarray) -> PipelineConfig:
    pos = 0
    choices = []
    for options in (space.imputer_methods, space.scalers, space.dimreds, space.families):
        block = vec[pos:pos + len(options)]
        choices.append(options[int(np.argmax(block))])
        pos += len(options)
    imputer_method, scaler, dimred, family = choices
    slot_values = {}
    for (fam, name, lo, hi, scale, is_int), u in zip(space.param_slots(), vec[pos:]):
        slot_values[(fam, name)] = _slot_decode(float(u), lo, hi, scale, is_int)
    dimred_param = 0.0
    if dimred == "pca":
        dimred_param = float(slot_values[("__dimred__", "components")])
    elif dimred == "variance_threshold":
        dimred_param = slot_values[("__dimred__", "threshold")]
    hyper = {name: slot_values[(family, name)]
             for name, *_ in HYPERPARAM_SPECS[family]}
    return PipelineConfig(
        imputer=ImputerConfig(method=imputer_method),
        stage=StageConfig(scaler=scaler, dimred=dimred, dimred_param=dimred_param),
        learner=LearnerConfig(family=family, hyperparams=hyper),
    )


def sample_config(space: SearchSpace, rng: np.random.Generator) -> PipelineConfig:
    """Uniform draw: every categorical choice and unit slot independently."""
    vec = np.zeros(space.n_dims())
    pos = 0
    for options in (space.imputer_methods, space.scalers, space.dimreds, space.families):
        vec[pos + int(rng.integers(len(options)))] = 1.0
        pos += len(options)
    vec[pos:] = rng.random(space.n_dims() - pos)
    return decode_config(space, vec)


# -- pipelines --------------------------------------------------------------------


@dataclass
class FittedPipeline:
    config: PipelineConfig
    imputer: object
    stage: FittedStage
    learner: FittedLearner

    def scores(self, features: Dataset) -> np.ndarray:
        complete = transform(self.imputer, features)
        m = apply_stage(self.stage, design_matrix(complete))
        return predict_score(self.learner, m)

    def event_probs(self, features: Dataset, horizon: float) -> np.ndarray:
        complete = transform(self.imputer, features)
        m = apply_stage(self.stage, design_matrix(complete))
        return predict_event_prob(self.learner, m, horizon)


def _labels_for(d: Dataset, task: TaskSpec):
    if task.task == "survival":
        return d.survival_vectors()
    return d.target_vector()


def fit_pipeline(c: PipelineConfig, features: Dataset, y, task: TaskSpec,
                 seed: int) -> FittedPipeline:
    imp = fit_imputer(features, c.imputer, seed)
    complete = transform(imp, features)
    m = design_matrix(complete)
    stage = fit_stage(m, c.stage)
    learner = fit_learner(c.learner, apply_stage(stage, m), y, seed, task=task.task)
    return FittedPipeline(config=c, imputer=imp, stage=stage, learner=learner)


@dataclass
class TrialRecord:
    config: PipelineConfig
    fold_scores: np.ndarray  # (r imputations, k folds)
    mean_score: float
    sd_score: float
    wall_time: float
    seed: int
    trial_index: int
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def evaluate_pipeline(c: PipelineConfig, d: Dataset, t: TaskSpec,
                      folds: FoldPlan, r: int, seed: int) -> TrialRecord:
    """r x k cross-validated scores; fit failures record the metric's worst
    value plus the error text instead of aborting."""
    started = time.perf_counter()
    features = d.feature_view()
    scores = np.zeros((r, folds.k))
    error = None
    for i in range(r):
        for f in range(folds.k):
            tr = folds.train_rows(f)
            te = folds.test_rows(f)
            try:
                fp = fit_pipeline(c, features.select_rows(tr),
                                  _subset_labels(d, t, tr), t, seed + i)
                pred = fp.scores(features.select_rows(te))
                res = score_metric(t.primary_metric, pred, _subset_labels(d, t, te))
                scores[i, f] = res.value
            except Exception as exc:  # noqa: BLE001 - robust search continuation
                scores[i, f] = WORST_SCORE[t.primary_metric]
                error = error or f"{type(exc).__name__}: {exc}"
    return TrialRecord(
        config=c, fold_scores=scores,
        mean_score=float(scores.mean()), sd_score=float(scores.std()),
        wall_time=time.perf_counter() - started,
        seed=seed, trial_index=-1, error=error,
    )


def _subset_labels(d: Dataset, t: TaskSpec, rows: np.ndarray):
    sub = d.select_rows(rows)
    return _labels_for(sub, t)


# -- Bayesian optimization ----------------------------------------------------------

N_INIT = 10
N_CAND = 500
SURROGATE_TREES = 100


def _norm_cdf(z: np.ndarray) -> np.ndarray:
    return np.asarray([0.5 * (1.0 + math.erf(v / math.sqrt(2.0))) for v in z])


def _norm_pdf(z: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * z ** 2) / math.sqrt(2.0 * math.pi)


def propose_next(history: list[TrialRecord], space: SearchSpace, seed: int,
                 n_init: int = N_INIT, n_cand: int = N_CAND,
                 surrogate_trees: int = SURROGATE_TREES) -> PipelineConfig:
    """Seeded random config until n_init trials exist, then the expected-
    improvement argmax over random candidates under a bagged-tree surrogate."""
    rng = np.random.default_rng([seed, len(history), 0x5EA4C])
    if len(history) < n_init:
        return sample_config(space, rng)
    X = np.stack([encode_config(space, h.config) for h in history])
    y = np.asarray([h.mean_score for h in history])
    thr = make_bins(X)
    Xb = bin_matrix(X, thr)
    cand = [sample_config(space, rng) for _ in range(n_cand)]
    Xc = np.stack([encode_config(space, c) for c in cand])
    preds = np.empty((surrogate_trees, n_cand))
    n = len(history)
    for t in range(surrogate_trees):
        t_rng = np.random.default_rng([seed, len(history), 1 + t])
        rows = t_rng.integers(0, n, size=n)
        tree = grow_tree(Xb, thr, y, max_depth=8, min_leaf=2, rows=rows)
        preds[t] = predict_tree(tree, Xc)
    mu = preds.mean(axis=0)
    sigma = preds.std(axis=0)
    best = float(y.max())
    ei = np.maximum(mu - best, 0.0)
    has_sd = sigma > 0
    if has_sd.any():
        z = (mu[has_sd] - best) / sigma[has_sd]
        ei[has_sd] = (mu[has_sd] - best) * _norm_cdf(z) + sigma[has_sd] * _norm_pdf(z)
    if ei.max() <= 0.0:
        return cand[int(np.argmax(mu))]
    return cand[int(np.argmax(ei))]


@dataclass
class StudyReport:
    task: TaskSpec
    space: SearchSpace
    trials: list[TrialRecord]
    best_index: int
    seed: int
    k: int
    r: int
    budget: int
    n_init: int
    n_cand: int
    surrogate_trees: int
    engine_version: str
    fingerprint: dict
    ensemble_summary: dict | None = None

    def best_trial(self) -> TrialRecord:
        return self.trials[self.best_index]


def run_study(d: Dataset, t: TaskSpec, space: SearchSpace, budget: int,
              k: int = 3, r: int = 1, seed: int = 0,
              n_init: int = N_INIT, n_cand: int = N_CAND,
              surrogate_trees: int = SURROGATE_TREES) -> StudyReport:
    """Sequential BO over exactly `budget` pipeline evaluations."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    folds = make_folds(d, k, seed, t)
    history: list[TrialRecord] = []
    for i in range(budget):
        cfg = propose_next(history, space, seed, n_init, n_cand, surrogate_trees)
        rec = evaluate_pipeline(cfg, d, t, folds, r, seed)
        rec.trial_index = i
        history.append(rec)
    order = sorted(range(budget),
                   key=lambda i: (-history[i].mean_score, history[i].trial_index))
    return StudyReport(
        task=t, space=space, trials=history, best_index=order[0],
        seed=seed, k=k, r=r, budget=budget,
        n_init=n_init, n_cand=n_cand, surrogate_trees=surrogate_trees,
        engine_version=ENGINE_VERSION,
        fingerprint={"n_rows": d.n_rows, "n_cols": d.n_cols,
                     "sha256": d.content_hash()},
    )


# -- ensembling ---------------------------------------------------------------------


@dataclass
class EnsembleModel:
    members: list[FittedPipeline]
    weights: np.ndarray
    task: TaskSpec

    def __post_init__(self):
        if len(self.members) < 1:
            raise TooFewTrials("an ensemble needs at least one member")
        w = np.asarray(self.weights, dtype=np.float64)
        if (w < 0).any():
            raise ValueError("weights must be non-negative")
        self.weights = w / w.sum()


def build_ensemble(report: StudyReport, d: Dataset, m: int,
                   temperature: float = 0.1) -> EnsembleModel:
    """Refit the top-m distinct non-failed configs on the full training data;
    weights are softmax(mean_score / temperature)."""
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    ranked = sorted((tr for tr in report.trials if not tr.failed),
                    key=lambda tr: (-tr.mean_score, tr.trial_index))
    chosen: list[TrialRecord] = []
    seen = set()
    for tr in ranked:
        if tr.config.key() in seen:
            continue
        seen.add(tr.config.key())
        chosen.append(tr)
        if len(chosen) == m:
            break
    if len(chosen) < m:
        raise TooFewTrials(f"only {len(chosen)} distinct non-failed trials, need {m}")
    features = d.feature_view()
    y = _labels_for(d, report.task)
    members = [fit_pipeline(tr.config, features, y, report.task, report.seed)
               for tr in chosen]
    scores = np.asarray([tr.mean_score for tr in chosen])
    w = np.exp((scores - scores.max()) / temperature)
    ens = EnsembleModel(members=members, weights=w, task=report.task)
    report.ensemble_summary = {
        "size": m, "temperature": temperature,
        "trial_indices": [tr.trial_index for tr in chosen],
        "mean_scores": [tr.mean_score for tr in chosen],
        "weights": ens.weights.tolist(),
        "weighting": "softmax of cross-validated mean score over temperature",
    }
    return ens


def predict_ensemble(e: EnsembleModel, d: Dataset) -> np.ndarray:
    """Weighted mean of member scores; each member runs its own imputer and
    stage first, so the input may contain missing cells."""
    features = d.feature_view()
    out = np.zeros(features.n_rows)
    for w, member in zip(e.weights, e.members):
        out += w * member.scores(features)
    return out


def predict_ensemble_event_prob(e: EnsembleModel, d: Dataset,
                                horizon: float | None = None) -> np.ndarray:
    if e.task.task != "survival":
        from .errors import NotSurvivalModel
        raise NotSurvivalModel("event probabilities exist only for survival tasks")
    h = horizon if horizon is not None else e.task.horizon
    features = d.feature_view()
    out = np.zeros(features.n_rows)
    for w, member in zip(e.weights, e.members):
        out += w * member.event_probs(features, h)
    return out


# -- config (de)serialization ----------------------------------------------------------

def config_to_dict(c: PipelineConfig) -> dict:
    return {
        "imputer": {"method": c.imputer.method, "max_rounds": c.imputer.max_rounds,
                    "tol": c.imputer.tol,
                    "candidate_models": list(c.imputer.candidate_models)},
        "stage": {"scaler": c.stage.scaler, "dimred": c.stage.dimred,
                  "dimred_param": c.stage.dimred_param},
        "learner": {"family": c.learner.family,
                    "hyperparams": dict(c.learner.hyperparams)},
    }


def config_from_dict(d: dict) -> PipelineConfig:
    return PipelineConfig(
        imputer=ImputerConfig(
            method=d["imputer"]["method"], max_rounds=d["imputer"]["max_rounds"],
            tol=d["imputer"]["tol"],
            candidate_models=tuple(d["imputer"]["candidate_models"])),
        stage=StageConfig(scaler=d["stage"]["scaler"], dimred=d["stage"]["dimred"],
                          dimred_param=d["stage"]["dimred_param"]),
        learner=LearnerConfig(family=d["learner"]["family"],
                              hyperparams=dict(d["learner"]["hyperparams"])),
    )


def space_to_dict(s: SearchSpace) -> dict:
    return {
        "task": s.task, "n_features": s.n_features,
        "imputer_methods": list(s.imputer_methods),
        "scalers": list(s.scalers), "dimreds": list(s.dimreds),
        "families": list(s.families),
        "hyperparameter_ranges": {
            fam: [{"name": n, "lo": lo, "hi": hi, "scale": sc, "integer": ii}
                  for n, lo, hi, sc, ii in HYPERPARAM_SPECS[fam]]
            for fam in s.families
        },
    }


def space_from_dict(d: dict) -> SearchSpace:
    return SearchSpace(
        task=d["task"], n_features=d["n_features"],
        imputer_methods=tuple(d["imputer_methods"]),
        scalers=tuple(d["scalers"]), dimreds=tuple(d["dimreds"]),
        families=tuple(d["families"]),
    )


def default_space(task: TaskSpec | str, schema_or_n) -> SearchSpace:
    task_name = task.task if isinstance(task, TaskSpec) else task
    if isinstance(schema_or_n, int):
        n = schema_or_n
    else:
        n = len(feature_names_expanded(schema_or_n))
    return SearchSpace(task=task_name, n_features=n)
