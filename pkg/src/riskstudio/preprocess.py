"""Feature scaling and dimensionality reduction pipeline stages.

A stage is fitted on the training matrix only and applied deterministically.
Scaling happens before dimensionality reduction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadParam, DegenerateInput, ShapeMismatch

SCALERS = ("none", "minmax", "standard", "maxabs", "row_l2", "quantile_uniform")
DIMREDS = ("none", "variance_threshold", "pca")


@dataclass(frozen=True)
class StageConfig:
    scaler: str = "none"
    dimred: str = "none"
    dimred_param: float = 0.0  # variance threshold, or component count for pca

    def __post_init__(self):
        if self.scaler not in SCALERS:
            raise BadParam(f"unknown scaler {self.scaler!r}")
        if self.dimred not in DIMREDS:
            raise BadParam(f"unknown dimred {self.dimred!r}")
        if self.dimred == "variance_threshold" and self.dimred_param < 0:
            raise BadParam("variance threshold must be >= 0")
        if self.dimred == "pca" and int(self.dimred_param) < 1:
            raise BadParam("pca needs at least one component")


@dataclass
class FittedStage:
    config: StageConfig
    n_in: int
    n_out: int
    scaler_state: dict = field(default_factory=dict)
    dimred_state: dict = field(default_factory=dict)


def _fit_scaler(m: np.ndarray, kind: str) -> dict:
    if kind == "minmax":
        return {"min": m.min(axis=0), "max": m.max(axis=0)}
    if kind == "standard":
        return {"mean": m.mean(axis=0), "sd": m.std(axis=0)}
    if kind == "maxabs":
        return {"absmax": np.abs(m).max(axis=0)}
    if kind == "quantile_uniform":
        # per-feature grid of (unique value, mean unit-rank position)
        grids = []
        n = m.shape[0]
        positions = np.linspace(0.0, 1.0, n) if n > 1 else np.array([0.5])
        for j in range(m.shape[1]):
            x = np.sort(m[:, j])
            uniq, start = np.unique(x, return_index=True)
            # mean position over each run of equal values
            ends = np.append(start[1:], n)
            mean_pos = np.array([positions[s:e].mean() for s, e in zip(start, ends)])
            grids.append((uniq, mean_pos))
        return {"grids": grids}
    return {}


def _apply_scaler(m: np.ndarray, kind: str, state: dict) -> np.ndarray:
    if kind == "none":
        return m.copy()
    if kind == "minmax":
        span = state["max"] - state["min"]
        out = np.zeros_like(m)
        ok = span > 0
        out[:, ok] = (m[:, ok] - state["min"][ok]) / span[ok]
        return out  # constant-in-training features map to 0 everywhere
    if kind == "standard":
        sd = state["sd"]
        out = np.zeros_like(m)
        ok = sd > 0
        out[:, ok] = (m[:, ok] - state["mean"][ok]) / sd[ok]
        return out
    if kind == "maxabs":
        am = state["absmax"]
        out = np.zeros_like(m)
        ok = am > 0
        out[:, ok] = m[:, ok] / am[ok]
        return out
    if kind == "row_l2":
        norms = np.sqrt((m ** 2).sum(axis=1))
        out = np.zeros_like(m)
        ok = norms > 0
        out[ok] = m[ok] / norms[ok, None]
        return out
    if kind == "quantile_uniform":
        out = np.empty_like(m)
        for j, (uniq, pos) in enumerate(state["grids"]):
            if len(uniq) == 1:
                out[:, j] = 0.0 if uniq[0] != uniq[0] else pos[0] * np.ones(m.shape[0])
            else:
                out[:, j] = np.interp(m[:, j], uniq, pos)
        return np.clip(out, 0.0, 1.0)
    raise BadParam(f"unknown scaler {kind!r}")


def _fit_pca(m: np.ndarray, k: int) -> dict:
    mean = m.mean(axis=0)
    centered = m - mean
    cov = centered.T @ centered / max(m.shape[0] - 1, 1)
    if not np.any(np.diag(cov) > 0):
        raise DegenerateInput("pca on a zero-variance matrix")
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1][:k]
    basis = evecs[:, order]
    # deterministic sign: the largest-magnitude loading of each component is positive
    for c in range(basis.shape[1]):
        i = int(np.argmax(np.abs(basis[:, c])))
        if basis[i, c] < 0:
            basis[:, c] = -basis[:, c]
    return {"mean": mean, "basis": basis}


def fit_stage(train_matrix: np.ndarray, cfg: StageConfig) -> FittedStage:
    """Fit scaler then dimensionality reduction on the training matrix only."""
    m = np.asarray(train_matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 2:
        raise DegenerateInput("need a 2-d matrix with at least 2 rows")
    if np.isnan(m).any():
        raise DegenerateInput("stage input must be complete (impute first)")
    scaler_state = _fit_scaler(m, cfg.scaler)
    scaled = _apply_scaler(m, cfg.scaler, scaler_state)
    dimred_state: dict = {}
    n_out = m.shape[1]
    if cfg.dimred == "variance_threshold":
        var = scaled.var(axis=0)
        keep = np.flatnonzero(var > cfg.dimred_param)
        if len(keep) == 0:
            raise DegenerateInput("variance threshold drops every feature")
        dimred_state = {"keep": keep}
        n_out = len(keep)
    elif cfg.dimred == "pca":
        k = int(cfg.dimred_param)
        if k > m.shape[1]:
            raise BadParam(f"pca components {k} > feature count {m.shape[1]}")
        dimred_state = _fit_pca(scaled, k)
        n_out = k
    return FittedStage(config=cfg, n_in=m.shape[1], n_out=n_out,
                       scaler_state=scaler_state, dimred_state=dimred_state)


def apply_stage(s: FittedStage, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != s.n_in:
        raise ShapeMismatch(f"expected {s.n_in} columns, got {m.shape}")
    out = _apply_scaler(m, s.config.scaler, s.scaler_state)
    if s.config.dimred == "variance_threshold":
        out = out[:, s.dimred_state["keep"]]
    elif s.config.dimred == "pca":
        out = (out - s.dimred_state["mean"]) @ s.dimred_state["basis"]
    return out
