"""k-nearest-neighbor prediction with deterministic tie handling."""

from __future__ import annotations

import numpy as np


def fit_knn(X: np.ndarray, y: np.ndarray, k: int) -> dict:
    return {"X": X.copy(), "y": y.copy(), "k": int(min(k, len(y)))}


def predict_knn(state: dict, X: np.ndarray) -> np.ndarray:
    """Mean target over the k Euclidean-nearest training rows.

    Equal distances break by training row index, so predictions are
    reproducible no matter how the query is batched.
    """
    train = state["X"]
    k = state["k"]
    out = np.empty(X.shape[0])
    chunk = 256
    train_sq = (train ** 2).sum(axis=1)
    for lo in range(0, X.shape[0], chunk):
        q = X[lo:lo + chunk]
        d2 = train_sq[None, :] - 2.0 * (q @ train.T) + (q ** 2).sum(axis=1)[:, None]
        for i in range(q.shape[0]):
            order = np.lexsort((np.arange(len(train)), d2[i]))
            out[lo + i] = state["y"][order[:k]].mean()
    return out
