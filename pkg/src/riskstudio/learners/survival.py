"""Survival learners: Cox proportional hazards and Weibull AFT.

Cox maximizes the ridge-penalized partial likelihood with Breslow tie
handling by Newton iterations; the baseline cumulative hazard is the Breslow
estimator, so event probabilities at a horizon are
1 - exp(-H0(h) * exp(beta'(x - center))).

Weibull AFT models log T = mu + beta'x + sigma * W with W standard minimum
extreme value; it is fitted by damped Newton on the exact log likelihood.

Features are centered internally for conditioning; both the partial
likelihood and the AFT likelihood make the fitted coefficients invariant to
that shift.
"""

from __future__ import annotations

import numpy as np

from ..errors import NoEvents, SingularUpdate

GRAD_TOL = 1e-6
MAX_ITER = 200
U_CLIP = 500.0  # caps exp() inside the AFT likelihood


def _check_survival(times: np.ndarray, events: np.ndarray) -> None:
    if (times <= 0).any():
        raise ValueError("event/censoring times must be strictly positive")
    if events.sum() < 1:
        raise NoEvents("survival fits need at least one observed event")


# -- Cox proportional hazards ----------------------------------------------------

def _cox_group_stats(X: np.ndarray, times: np.ndarray, events: np.ndarray,
                     beta: np.ndarray, want_hessian: bool):
    """Breslow suffix statistics per unique time, ascending.

    Returns (pll, grad, hess) of the unpenalized partial log likelihood; the
    linear predictor is max-shifted before exponentiation, which cancels in
    every ratio and is added back to the log terms.
    """
    order = np.argsort(times, kind="stable")
    t = times[order]
    e = events[order]
    Xs = X[order]
    eta = Xs @ beta
    shift = eta.max() if len(eta) else 0.0
    w = np.exp(eta - shift)

    uniq, starts = np.unique(t, return_index=True)
    G = len(uniq)
    ends = np.append(starts[1:], len(t))

    # suffix sums over groups, computed back to front
    p = X.shape[1]
    S0 = 0.0
    S1 = np.zeros(p)
    S2 = np.zeros((p, p)) if want_hessian else None
    pll = 0.0
    grad = np.zeros(p)
    hess = np.zeros((p, p)) if want_hessian else None
    for g in range(G - 1, -1, -1):
        seg = slice(starts[g], ends[g])
        wseg = w[seg]
        S0 += wseg.sum()
        S1 += wseg @ Xs[seg]
        if want_hessian:
            S2 += (Xs[seg] * wseg[:, None]).T @ Xs[seg]
        ev = e[seg] == 1
        d = int(ev.sum())
        if d == 0:
            continue
        pll += eta[seg][ev].sum() - d * (np.log(S0) + shift)
        r1 = S1 / S0
        grad += Xs[seg][ev].sum(axis=0) - d * r1
        if want_hessian:
            hess -= d * (S2 / S0 - np.outer(r1, r1))
    return pll, grad, hess


def cox_loss(beta: np.ndarray, X: np.ndarray, times: np.ndarray,
             events: np.ndarray, l2: float) -> float:
    """Negative mean Breslow partial log likelihood plus (l2/2)||beta||^2."""
    pll, _, _ = _cox_group_stats(X, times, events, beta, want_hessian=False)
    return float(-pll / len(times) + 0.5 * l2 * np.sum(beta ** 2))


def cox_gradient(beta: np.ndarray, X: np.ndarray, times: np.ndarray,
                 events: np.ndarray, l2: float) -> np.ndarray:
    _, g, _ = _cox_group_stats(X, times, events, beta, want_hessian=False)
    return -g / len(times) + l2 * beta


def fit_cox(X: np.ndarray, times: np.ndarray, events: np.ndarray, l2: float) -> dict:
    times = np.asarray(times, dtype=np.float64)
    events = np.asarray(events, dtype=np.float64)
    _check_survival(times, events)
    center = X.mean(axis=0)
    Xc = X - center
    n, p = Xc.shape
    beta = np.zeros(p)
    loss = cox_loss(beta, Xc, times, events, l2)
    diverged = False
    for _ in range(MAX_ITER):
        pll, g_raw, h_raw = _cox_group_stats(Xc, times, events, beta, want_hessian=True)
        grad = -g_raw / n + l2 * beta
        if np.linalg.norm(grad) < GRAD_TOL:
            break
        hess = -h_raw / n + l2 * np.eye(p)
        try:
            step = np.linalg.solve(hess + 1e-10 * np.eye(p), grad)
        except np.linalg.LinAlgError:
            step = grad
        beta, loss, ok = _backtrack(
            lambda b: cox_loss(b, Xc, times, events, l2), beta, step, loss)
        if not ok:
            beta, loss, ok = _backtrack(
                lambda b: cox_loss(b, Xc, times, events, l2), beta, grad, loss)
            if not ok:
                diverged = not np.isfinite(loss)
                break
    if diverged:
        raise SingularUpdate("cox Newton and gradient steps both diverged")
    base_times, base_cumhaz = _breslow_baseline(Xc, times, events, beta)
    return {"beta": beta, "center": center, "l2": l2,
            "baseline_times": base_times, "baseline_cumhaz": base_cumhaz}


def _breslow_baseline(Xc, times, events, beta):
    """Cumulative baseline hazard at unique event times (ascending)."""
    eta = Xc @ beta
    shift = eta.max()
    w = np.exp(eta - shift)
    order = np.argsort(times, kind="stable")
    t = times[order]
    e = events[order]
    ws = w[order]
    uniq, starts = np.unique(t, return_index=True)
    ends = np.append(starts[1:], len(t))
    suffix = np.cumsum(ws[::-1])[::-1]  # suffix[i] = sum of w from sorted row i on
    out_t, out_h = [], []
    h = 0.0
    for g in range(len(uniq)):
        d = float(e[starts[g]:ends[g]].sum())
        if d == 0:
            continue
        S0 = suffix[starts[g]] * np.exp(shift)
        h += d / S0
        out_t.append(uniq[g])
        out_h.append(h)
    return np.asarray(out_t), np.asarray(out_h)


def cox_risk(state: dict, X: np.ndarray) -> np.ndarray:
    """Relative hazard exp(beta'(x - center)); higher risks events earlier."""
    return np.exp((X - state["center"]) @ state["beta"])


def cox_event_prob(state: dict, X: np.ndarray, horizon: float) -> np.ndarray:
    bt = state["baseline_times"]
    bh = state["baseline_cumhaz"]
    idx = np.searchsorted(bt, horizon, side="right") - 1
    h0 = bh[idx] if idx >= 0 else 0.0
    return 1.0 - np.exp(-h0 * cox_risk(state, X))


# -- Weibull accelerated failure time ---------------------------------------------

def _aft_terms(params: np.ndarray, X: np.ndarray, times: np.ndarray,
               events: np.ndarray):
    log_sigma, mu = params[0], params[1]
    beta = params[2:]
    sigma = np.exp(log_sigma)
    u = (np.log(times) - mu - X @ beta) / sigma
    a = np.exp(np.minimum(u, U_CLIP))
    return sigma, u, a, beta


def aft_loss(params: np.ndarray, X: np.ndarray, times: np.ndarray,
             events: np.ndarray, l2: float) -> float:
    """Negative mean Weibull AFT log likelihood plus (l2/2)||beta||^2.

    params = [log sigma, mu, beta...]; events contribute
    -log sigma - log t + u - e^u and censored rows contribute -e^u.
    """
    sigma, u, a, beta = _aft_terms(params, X, times, events)
    delta = events
    ll = np.sum(delta * (-np.log(sigma) - np.log(times) + u) - a)
    return float(-ll / len(times) + 0.5 * l2 * np.sum(beta ** 2))


def aft_gradient(params: np.ndarray, X: np.ndarray, times: np.ndarray,
                 events: np.ndarray, l2: float) -> np.ndarray:
    sigma, u, a, beta = _aft_terms(params, X, times, events)
    delta = events
    c = delta - a  # = sigma * d(-ll_i)/d(mu) = sigma * d(-ll_i)/d(beta_j) / x_ij
    dll_logsig = np.sum(-delta + u * (a - delta))
    g = np.concatenate([[-dll_logsig], [np.sum(c) / sigma], X.T @ c / sigma])
    out = g / len(times)
    out[2:] += l2 * beta
    return out


def _aft_hessian(params: np.ndarray, X: np.ndarray, times: np.ndarray,
                 events: np.ndarray, l2: float) -> np.ndarray:
    sigma, u, a, beta = _aft_terms(params, X, times, events)
    delta = events
    n = len(times)
    p = X.shape[1]
    H = np.zeros((2 + p, 2 + p))
    # second derivatives of +ll, assembled then negated
    h_mumu = -np.sum(a) / sigma ** 2
    h_mubeta = -(X.T @ a) / sigma ** 2
    h_betabeta = -(X * a[:, None]).T @ X / sigma ** 2
    mix = (delta - a - a * u) / sigma
    h_lsmu = np.sum(mix)
    h_lsbeta = X.T @ mix
    h_lsls = np.sum(u * (a - delta) * -1.0 - u ** 2 * a)
    H[0, 0] = h_lsls
    H[0, 1] = H[1, 0] = h_lsmu
    H[0, 2:] = H[2:, 0] = h_lsbeta
    H[1, 1] = h_mumu
    H[1, 2:] = H[2:, 1] = h_mubeta
    H[2:, 2:] = h_betabeta
    out = -H / n
    out[2:, 2:] += l2 * np.eye(p)
    return out


def fit_weibull_aft(X: np.ndarray, times: np.ndarray, events: np.ndarray,
                    l2: float) -> dict:
    times = np.asarray(times, dtype=np.float64)
    events = np.asarray(events, dtype=np.float64)
    _check_survival(times, events)
    center = X.mean(axis=0)
    Xc = X - center
    p = Xc.shape[1]
    logt = np.log(times)
    params = np.concatenate([
        [np.log(max(logt.std(), 0.1))], [logt.mean()], np.zeros(p)])
    loss = aft_loss(params, Xc, times, events, l2)
    for _ in range(MAX_ITER):
        grad = aft_gradient(params, Xc, times, events, l2)
        if np.linalg.norm(grad) < GRAD_TOL:
            break
        H = _aft_hessian(params, Xc, times, events, l2)
        try:
            step = np.linalg.solve(H + 1e-10 * np.eye(len(params)), grad)
        except np.linalg.LinAlgError:
            step = grad
        if not np.all(np.isfinite(step)) or grad @ step <= 0:
            step = grad  # Newton direction unusable; steepest descent
        params, loss, ok = _backtrack(
            lambda q: aft_loss(q, Xc, times, events, l2), params, step, loss)
        if not ok:
            params, loss, ok = _backtrack(
                lambda q: aft_loss(q, Xc, times, events, l2), params, grad, loss)
            if not ok:
                if not np.isfinite(loss):
                    raise SingularUpdate("weibull aft fit diverged")
                break
    sigma = float(np.exp(params[0]))
    return {"log_sigma": float(params[0]), "mu": float(params[1]),
            "beta": params[2:], "center": center, "l2": l2, "sigma": sigma}


def aft_risk(state: dict, X: np.ndarray) -> np.ndarray:
    """Proportional-hazards form of the AFT: exp(-beta'(x-center)/sigma)."""
    lin = (X - state["center"]) @ state["beta"]
    return np.exp(-lin / state["sigma"])


def aft_event_prob(state: dict, X: np.ndarray, horizon: float) -> np.ndarray:
    lin = state["mu"] + (X - state["center"]) @ state["beta"]
    u = (np.log(horizon) - lin) / state["sigma"]
    return 1.0 - np.exp(-np.exp(np.minimum(u, U_CLIP)))


def _backtrack(loss_fn, params, direction, loss, max_halvings: int = 30):
    step = 1.0
    for _ in range(max_halvings):
        cand = params - step * direction
        cand_loss = loss_fn(cand)
        if cand_loss < loss:
            return cand, cand_loss, True
        step *= 0.5
    return params, loss, False
