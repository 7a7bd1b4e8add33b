"""Logistic and ridge regression with analytic objectives and gradients.

Both models carry an unpenalized intercept; the l2 penalty applies to the
weight vector only. Parameter vectors are laid out [intercept, weights...].
"""

from __future__ import annotations

import numpy as np

from ..errors import SingularUpdate

GRAD_TOL = 1e-6


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((X.shape[0], 1)), X])


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


# -- logistic ------------------------------------------------------------------

def logistic_loss(params: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> float:
    """Mean log loss plus (l2/2)||w||^2, probabilities clipped at 1e-12."""
    z = _augment(X) @ params
    p = np.clip(sigmoid(z), 1e-12, 1.0 - 1e-12)
    nll = -np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    return float(nll + 0.5 * l2 * np.sum(params[1:] ** 2))


def logistic_gradient(params: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> np.ndarray:
    Xa = _augment(X)
    p = sigmoid(Xa @ params)
    g = Xa.T @ (p - y) / len(y)
    g[1:] += l2 * params[1:]
    return g


def fit_logistic(X: np.ndarray, y: np.ndarray, l2: float, iters: int) -> dict:
    """Full-batch Newton with step halving; gradient step on singular updates."""
    Xa = _augment(X)
    n, d = Xa.shape
    params = np.zeros(d)
    pen = np.full(d, l2)
    pen[0] = 0.0
    loss = logistic_loss(params, X, y, l2)
    for _ in range(int(iters)):
        g = logistic_gradient(params, X, y, l2)
        if np.linalg.norm(g) < GRAD_TOL:
            break
        p = sigmoid(Xa @ params)
        w = p * (1.0 - p)
        H = (Xa.T * w) @ Xa / n + np.diag(pen)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = g
        obj = lambda q: logistic_loss(q, X, y, l2)  # noqa: E731
        params, loss, ok = _backtrack(obj, params, step, loss)
        if not ok:
            # Newton direction failed outright; try plain gradient
            params, loss, ok = _backtrack(obj, params, g, loss)
            if not ok:
                break
    return {"params": params, "l2": l2}


def _backtrack(loss_fn, params, direction, loss, max_halvings: int = 30):
    """Halve the step until the loss decreases; returns (params, loss, ok)."""
    step = 1.0
    for _ in range(max_halvings):
        cand = params - step * direction
        cand_loss = loss_fn(cand)
        if cand_loss < loss:
            return cand, cand_loss, True
        step *= 0.5
    return params, loss, False


def predict_logistic(state: dict, X: np.ndarray) -> np.ndarray:
    return sigmoid(_augment(X) @ state["params"])


# -- ridge ---------------------------------------------------------------------

def ridge_loss(params: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> float:
    """Half mean squared error plus (l2/2)||w||^2."""
    r = _augment(X) @ params - y
    return float(0.5 * np.mean(r ** 2) + 0.5 * l2 * np.sum(params[1:] ** 2))


def ridge_gradient(params: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> np.ndarray:
    Xa = _augment(X)
    g = Xa.T @ (Xa @ params - y) / len(y)
    g[1:] += l2 * params[1:]
    return g


def fit_ridge(X: np.ndarray, y: np.ndarray, l2: float) -> dict:
    """Closed-form normal equations (the exact minimizer of ridge_loss)."""
    Xa = _augment(X)
    n, d = Xa.shape
    pen = np.full(d, l2)
    pen[0] = 0.0
    A = Xa.T @ Xa / n + np.diag(pen)
    b = Xa.T @ y / n
    try:
        params = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        try:
            params = np.linalg.lstsq(A, b, rcond=None)[0]
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise SingularUpdate("ridge normal equations are singular") from exc
    return {"params": params, "l2": l2}


def predict_ridge(state: dict, X: np.ndarray) -> np.ndarray:
    return _augment(X) @ state["params"]
