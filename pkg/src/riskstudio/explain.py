"""Model understanding and debugging: effect sizes, permutation importance,
sampled Shapley attributions, value-of-information curves, and subgroup
evaluation.

Attributions and permutations operate on raw schema features (a categorical
feature is flipped or shuffled as one unit), so every explanation has exactly
one value per feature the clinician recognizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGroups, DegenerateSplit, EmptyBackground, EmptyFeatureSet
from .metrics import (
    MetricResult,
    auroc,
    brier,
    cohens_d,
    concordance_index,
    r_squared,
    score_metric,
    survival_brier,
)
from .search import EnsembleModel, default_space, predict_ensemble, run_study
from .tabular import Dataset, TaskSpec

VOI_THRESHOLDS = (1.0, 0.9, 0.8, 0.7, 0.6, 0.5)
VOI_BUDGET = 25


@dataclass(frozen=True)
class Explanation:
    method: str
    feature_names: tuple[str, ...]
    values: np.ndarray
    metadata: dict

    def ranked(self) -> list[tuple[str, float]]:
        order = np.argsort(-np.abs(self.values), kind="stable")
        return [(self.feature_names[i], float(self.values[i])) for i in order]


@dataclass(frozen=True)
class VoiCurve:
    thresholds: tuple[float, ...]
    n_features: tuple[int, ...]
    feature_names: tuple[tuple[str, ...], ...]
    scores: tuple[float, ...]


def _expanded_observed_columns(d: Dataset):
    """(name, values, observed mask, parent feature) per expanded feature."""
    out = []
    for j, c in enumerate(d.schema):
        if c.role != "feature":
            continue
        col = d.values[:, j]
        obs = ~d.missing_mask[:, j]
        if c.kind == "categorical":
            for lvl_idx, lvl in enumerate(c.categories or ()):
                vals = (col == lvl_idx).astype(np.float64)
                out.append((f"{c.name}={lvl}", vals, obs, c.name))
        else:
            out.append((c.name, col, obs, c.name))
    return out


def effect_size_ranking(d: Dataset, outcome) -> Explanation:
    """Absolute Cohen's d of every expanded feature against a binary outcome,
    using observed cells only."""
    y = np.asarray(outcome, dtype=np.float64)
    names, values = [], []
    for name, vals, obs, _parent in _expanded_observed_columns(d):
        names.append(name)
        try:
            values.append(abs(cohens_d(vals[obs], y[obs])))
        except DegenerateGroups:
            values.append(0.0)
    if not names:
        raise EmptyFeatureSet("dataset has no feature columns")
    return Explanation(
        method="effect_size", feature_names=tuple(names),
        values=np.asarray(values), metadata={"grouping": "observed outcome"},
    )


def outcome_vector(d: Dataset, task: TaskSpec) -> np.ndarray:
    """Binary grouping used for effect sizes: the class label, the event
    indicator, or a median split of a regression target."""
    if task.task == "survival":
        _, events = d.survival_vectors()
        return events
    y = d.target_vector()
    if task.task == "classification":
        return y
    return (y >= np.median(y)).astype(np.float64)


def permutation_importance(model: EnsembleModel, d: Dataset, labels, metric: str,
                           repeats: int, seed: int) -> Explanation:
    """Mean drop in the metric after permuting one feature column at a time.

    Values and mask bits shuffle together, so a permuted column remains a
    valid sample of that feature.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    baseline = score_metric(metric, predict_ensemble(model, d), labels).value
    feature_cols = [(j, c.name) for j, c in enumerate(d.schema) if c.role == "feature"]
    names, values, all_drops = [], [], []
    for j, name in feature_cols:
        drops = []
        for rep in range(repeats):
            rng = np.random.default_rng([seed, j, rep])
            perm = rng.permutation(d.n_rows)
            shuffled = Dataset(schema=list(d.schema), values=d.values.copy(),
                               missing_mask=d.missing_mask.copy())
            shuffled.values[:, j] = d.values[perm, j]
            shuffled.missing_mask[:, j] = d.missing_mask[perm, j]
            score = score_metric(metric, predict_ensemble(model, shuffled), labels).value
            drops.append(baseline - score)
        names.append(name)
        values.append(float(np.mean(drops)))
        all_drops.append(drops)
    return Explanation(
        method="permutation", feature_names=tuple(names),
        values=np.asarray(values),
        metadata={"metric": metric, "repeats": repeats, "seed": seed,
                  "baseline": baseline, "drops": all_drops},
    )


def sampled_shapley(model: EnsembleModel, x: Dataset, background: Dataset,
                    n_samples: int, seed: int) -> Explanation:
    """Monte-Carlo permutation Shapley for one instance.

    Each sample draws a feature permutation and a background row, then walks
    the features in permutation order, flipping them from the background value
    to the instance's value and crediting each feature with the marginal score
    change. Summed attributions telescope to f(x) minus the mean prediction of
    the sampled background rows.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if background.n_rows == 0:
        raise EmptyBackground("need at least one background row")
    xf = x.feature_view()
    bg = background.feature_view()
    if xf.n_rows != 1:
        raise ValueError("explain one instance at a time")
    feature_idx = list(range(len(xf.schema)))
    p = len(feature_idx)
    names = tuple(c.name for c in xf.schema)
    rng = np.random.default_rng([seed, 0xA77])

    # assemble all intermediate rows, then run one batched prediction pass
    rows_values = np.empty((n_samples * (p + 1), p))
    rows_mask = np.empty((n_samples * (p + 1), p), dtype=bool)
    perms = np.empty((n_samples, p), dtype=np.int64)
    for s in range(n_samples):
        perms[s] = rng.permutation(p)
        b = int(rng.integers(bg.n_rows))
        v = bg.values[b].copy()
        m = bg.missing_mask[b].copy()
        base = s * (p + 1)
        rows_values[base] = v
        rows_mask[base] = m
        for step, j in enumerate(perms[s]):
            v = v.copy()
            m = m.copy()
            v[j] = xf.values[0, j]
            m[j] = xf.missing_mask[0, j]
            rows_values[base + 1 + step] = v
            rows_mask[base + 1 + step] = m
    stacked = Dataset(schema=list(xf.schema), values=rows_values,
                      missing_mask=rows_mask)
    preds = predict_ensemble(model, stacked).reshape(n_samples, p + 1)

    marginals = np.zeros((n_samples, p))
    steps = preds[:, 1:] - preds[:, :-1]
    for s in range(n_samples):
        marginals[s, perms[s]] = steps[s]
    values = marginals.mean(axis=0)
    totals = preds[:, -1] - preds[:, 0]  # telescoped per-sample sums
    se = float(totals.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    return Explanation(
        method="shapley", feature_names=names, values=values,
        metadata={"n_samples": n_samples, "seed": seed,
                  "prediction": float(preds[0, -1]),
                  "background_mean": float(np.mean(preds[:, 0])),
                  "total_se": se},
    )


def value_of_information(d: Dataset, t: TaskSpec, thresholds=VOI_THRESHOLDS,
                         budget: int = VOI_BUDGET, seed: int = 0,
                         k: int = 3, r: int = 1) -> VoiCurve:
    """Score a reduced study per effect-size threshold (descending);
    feature sets are nested by construction."""
    thresholds = tuple(float(v) for v in thresholds)
    if any(b >= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly descending")
    ranking = effect_size_ranking(d, outcome_vector(d, t))
    per_parent: dict[str, float] = {}
    for name, vals, obs, parent in _expanded_observed_columns(d):
        idx = ranking.feature_names.index(name)
        per_parent[parent] = max(per_parent.get(parent, 0.0),
                                 float(ranking.values[idx]))
    non_feature = [c.name for c in d.schema if c.role in ("target", "time", "event")]
    ns, names_out, scores = [], [], []
    for thr in thresholds:
        keep = [c.name for c in d.schema
                if c.role == "feature" and per_parent.get(c.name, 0.0) >= thr]
        if not keep:
            raise EmptyFeatureSet(f"no feature has |d| >= {thr}")
        sub = d.select_columns(keep + non_feature)
        space = default_space(t, sub.schema)
        report = run_study(sub, t, space, budget=budget, k=k, r=r, seed=seed)
        ns.append(len(keep))
        names_out.append(tuple(keep))
        scores.append(report.best_trial().mean_score)
    return VoiCurve(thresholds=thresholds, n_features=tuple(ns),
                    feature_names=tuple(names_out), scores=tuple(scores))


def subgroup_report(model: EnsembleModel, d: Dataset, labels, split_feature: str,
                    split_value: float, with_effect_sizes: bool = False) -> dict:
    """Task metrics per subgroup: rows with feature < value versus >= value.

    Rows whose split feature is missing are excluded (and counted). With
    with_effect_sizes, the feature effect-size ranking is recomputed inside
    each subgroup so cohort-specific risk factors become visible.
    """
    j = d.column_index(split_feature)
    observed = ~d.missing_mask[:, j]
    below = observed & (d.values[:, j] < split_value)
    above = observed & (d.values[:, j] >= split_value)
    out: dict[str, dict] = {"excluded_missing": int((~observed).sum())}
    for label, rows in ((f"{split_feature}<{split_value}", below),
                        (f"{split_feature}>={split_value}", above)):
        if rows.sum() == 0:
            raise DegenerateSplit(f"group {label!r} is empty")
        sub = d.select_rows(np.flatnonzero(rows))
        sub_labels = _subset(labels, rows)
        try:
            metrics = _group_metrics(model, sub, sub_labels)
        except Exception as exc:
            raise DegenerateSplit(f"group {label!r}: {exc}") from exc
        info = {"n": int(rows.sum()), "metrics": {m.name: m for m in metrics}}
        if with_effect_sizes:
            info["effect_sizes"] = effect_size_ranking(
                sub, outcome_vector(sub, model.task)).ranked()
        out[label] = info
    return out


def _subset(labels, rows: np.ndarray):
    if isinstance(labels, tuple):
        return tuple(np.asarray(v)[rows] for v in labels)
    return np.asarray(labels)[rows]


def _group_metrics(model: EnsembleModel, d: Dataset, labels) -> list[MetricResult]:
    task = model.task
    scores = predict_ensemble(model, d)
    if task.task == "classification":
        return [auroc(scores, labels), brier(np.clip(scores, 0, 1), labels)]
    if task.task == "regression":
        return [r_squared(scores, labels)]
    times, events = labels
    from .search import predict_ensemble_event_prob

    probs = predict_ensemble_event_prob(model, d)
    return [concordance_index(scores, times, events),
            survival_brier(probs, times, events, task.horizon)]
