"""Discrimination, calibration, and clinical-utility metrics.

Every definition here is deliberately simple enough to check against an
exhaustive pairwise or direct-summation oracle; the test suite does exactly
that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadThreshold,
    DegenerateGroups,
    NoComparablePairs,
    NoUsableSubjects,
    OneClassOnly,
)


@dataclass(frozen=True)
class MetricResult:
    name: str
    value: float
    n_effective: int


@dataclass(frozen=True)
class NetBenefitCurve:
    thresholds: np.ndarray
    model_nb: np.ndarray
    treat_all_nb: np.ndarray
    treat_none_nb: np.ndarray


def _as_binary(labels) -> np.ndarray:
    y = np.asarray(labels, dtype=np.float64)
    if not np.isin(np.unique(y), [0.0, 1.0]).all():
        raise ValueError("labels must be binary 0/1")
    return y


def auroc(scores, labels) -> MetricResult:
    """(concordant pairs + 0.5 * tied pairs) / (positives * negatives).

    Computed via average ranks, which matches the pairwise count exactly.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = _as_binary(labels)
    n_pos = int(y.sum())
    n_neg = int(len(y) - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise OneClassOnly("need both classes to rank")
    order = np.argsort(s, kind="stable")
    ranks = np.empty(len(s), dtype=np.float64)
    ranks[order] = np.arange(1, len(s) + 1)
    # average ranks over tied scores
    sorted_s = s[order]
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        if j > i:
            ranks[order[i:j + 1]] = 0.5 * (i + 1 + j + 1)
        i = j + 1
    rank_sum_pos = ranks[y == 1].sum()
    value = (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    return MetricResult("auroc", float(value), n_pos * n_neg)


def brier(probs, labels) -> MetricResult:
    """Mean squared error between forecast probabilities and binary outcomes."""
    p = np.asarray(probs, dtype=np.float64)
    y = _as_binary(labels)
    if (p < 0).any() or (p > 1).any():
        raise ValueError("probabilities must lie in [0, 1]")
    return MetricResult("brier", float(np.mean((p - y) ** 2)), len(y))


def r_squared(predictions, targets) -> MetricResult:
    """Coefficient of determination, 1 - SSE/SST."""
    yhat = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    sst = float(((y - y.mean()) ** 2).sum())
    if sst == 0:
        raise DegenerateGroups("constant targets have no explainable variance")
    sse = float(((y - yhat) ** 2).sum())
    return MetricResult("r_squared", 1.0 - sse / sst, len(y))


def concordance_index(risks, times, events) -> MetricResult:
    """Harrell's C over comparable pairs.

    (i, j) is comparable iff t_i < t_j and subject i had the event; the pair is
    concordant when risk_i > risk_j, and tied risks count one half. Tied event
    times are never comparable.
    """
    r = np.asarray(risks, dtype=np.float64)
    t = np.asarray(times, dtype=np.float64)
    e = _as_binary(events)
    n = len(r)
    concordant = 0.0
    n_pairs = 0
    chunk = 512
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        ti = t[lo:hi, None]
        ei = e[lo:hi, None]
        ri = r[lo:hi, None]
        comparable = (ti < t[None, :]) & (ei == 1)
        n_pairs += int(comparable.sum())
        concordant += float(((ri > r[None, :]) & comparable).sum())
        concordant += 0.5 * float(((ri == r[None, :]) & comparable).sum())
    if n_pairs == 0:
        raise NoComparablePairs("no (earlier event, later follow-up) pairs")
    return MetricResult("c_index", concordant / n_pairs, n_pairs)


def survival_brier(event_probs_at_h, times, events, horizon: float) -> MetricResult:
    """Brier score at a horizon with censored-before-horizon subjects excluded.

    Usable subjects: events at or before the horizon (outcome 1) and subjects
    followed to at least the horizon (outcome 0). No IPCW reweighting; the
    exclusion is visible through n_effective.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    p = np.asarray(event_probs_at_h, dtype=np.float64)
    t = np.asarray(times, dtype=np.float64)
    e = _as_binary(events)
    had_event = (t <= horizon) & (e == 1)
    survived = t >= horizon
    usable = had_event | survived
    if not usable.any():
        raise NoUsableSubjects("every subject was censored before the horizon")
    y = had_event[usable].astype(np.float64)
    val = float(np.mean((p[usable] - y) ** 2))
    return MetricResult("survival_brier", val, int(usable.sum()))


def net_benefit_curve(probs, labels, thresholds) -> NetBenefitCurve:
    """Decision-curve net benefit: (TP - FP * t/(1-t)) / N at each threshold.

    Predictions are positive when prob >= t. Treat-all and treat-none use
    their closed forms.
    """
    p = np.asarray(probs, dtype=np.float64)
    y = _as_binary(labels)
    ts = np.asarray(thresholds, dtype=np.float64)
    if ts.ndim != 1 or len(ts) == 0:
        raise BadThreshold("thresholds must be a non-empty 1-d list")
    if (ts <= 0).any() or (ts >= 1).any():
        raise BadThreshold("thresholds must lie strictly inside (0, 1)")
    if (np.diff(ts) <= 0).any():
        raise BadThreshold("thresholds must be strictly ascending")
    n = len(y)
    prevalence = y.mean()
    odds = ts / (1.0 - ts)
    pred = p[None, :] >= ts[:, None]
    tp = (pred & (y == 1)[None, :]).sum(axis=1)
    fp = (pred & (y == 0)[None, :]).sum(axis=1)
    model_nb = (tp - fp * odds) / n
    treat_all = prevalence - (1.0 - prevalence) * odds
    return NetBenefitCurve(
        thresholds=ts,
        model_nb=model_nb,
        treat_all_nb=treat_all,
        treat_none_nb=np.zeros_like(ts),
    )


def default_dca_thresholds(tmin: float = 0.01, tmax: float = 0.50,
                           tstep: float = 0.01) -> np.ndarray:
    """Screening-range grid used by the dca report (0.01..0.50 by 0.01)."""
    n = int(round((tmax - tmin) / tstep))
    return np.round(tmin + tstep * np.arange(n + 1), 10)


def cohens_d(values, group) -> float:
    """Standardized mean difference (group 1 minus group 0), pooled sd."""
    x = np.asarray(values, dtype=np.float64)
    g = _as_binary(group)
    x1, x0 = x[g == 1], x[g == 0]
    n1, n0 = len(x1), len(x0)
    if n1 < 2 or n0 < 2:
        raise DegenerateGroups("both groups need at least 2 members")
    s1 = x1.var(ddof=1)
    s0 = x0.var(ddof=1)
    pooled = ((n1 - 1) * s1 + (n0 - 1) * s0) / (n1 + n0 - 2)
    if pooled <= 0:
        raise DegenerateGroups("pooled variance is zero")
    return float((x1.mean() - x0.mean()) / np.sqrt(pooled))


def score_metric(name: str, predictions, d_labels) -> MetricResult:
    """Dispatch a primary metric by name.

    For c_index, d_labels is a (times, events) tuple.
    """
    if name == "auroc":
        return auroc(predictions, d_labels)
    if name == "r_squared":
        return r_squared(predictions, d_labels)
    if name == "c_index":
        times, events = d_labels
        return concordance_index(predictions, times, events)
    raise ValueError(f"unknown metric {name!r}")


WORST_SCORE = {"auroc": 0.0, "c_index": 0.0, "r_squared": -1e6}
