"""Gaussian naive Bayes for binary classification."""

from __future__ import annotations

import numpy as np

from ..errors import IncompatibleTask


def fit_gaussian_nb(X: np.ndarray, y: np.ndarray) -> dict:
    classes = np.unique(y)
    if not np.isin(classes, [0.0, 1.0]).all():
        raise IncompatibleTask("gaussian_nb needs binary 0/1 labels")
    means, variances, priors = [], [], []
    overall_var = X.var(axis=0).max() if X.size else 0.0
    eps = max(1e-9 * overall_var, 1e-12)
    for c in (0.0, 1.0):
        rows = y == c
        if rows.sum() == 0:
            means.append(np.zeros(X.shape[1]))
            variances.append(np.full(X.shape[1], eps))
            priors.append(0.0)
            continue
        means.append(X[rows].mean(axis=0))
        variances.append(X[rows].var(axis=0) + eps)
        priors.append(rows.mean())
    return {"means": np.asarray(means), "variances": np.asarray(variances),
            "priors": np.asarray(priors)}


def predict_gaussian_nb(state: dict, X: np.ndarray) -> np.ndarray:
    logp = []
    for c in (0, 1):
        prior = state["priors"][c]
        if prior == 0.0:
            logp.append(np.full(X.shape[0], -np.inf))
            continue
        m = state["means"][c]
        v = state["variances"][c]
        ll = -0.5 * np.sum(np.log(2.0 * np.pi * v) + (X - m) ** 2 / v, axis=1)
        logp.append(np.log(prior) + ll)
    lp = np.stack(logp, axis=1)
    mx = lp.max(axis=1, keepdims=True)
    w = np.exp(lp - mx)
    return w[:, 1] / w.sum(axis=1)
