"""Decision-tree engine plus forest and boosting learners.

Trees are grown breadth-first on binned features: every feature is quantized
once per fit (exact midpoint thresholds when a feature has <= 256 distinct
values, quantile bins otherwise), and each level evaluates all active nodes
with a handful of bincount passes. Split gain is the SSE decrease, which for
0/1 labels is proportional to Gini gain, so one engine serves regression and
binary classification. Ties break deterministically: lowest feature index,
then lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_BINS = 256
GAIN_EPS = 1e-12


def make_bins(X: np.ndarray, max_bins: int = MAX_BINS) -> list[np.ndarray]:
    """Per-feature ascending candidate thresholds."""
    thresholds = []
    for j in range(X.shape[1]):
        uniq = np.unique(X[:, j])
        if len(uniq) <= 1:
            thr = np.empty(0)
        elif len(uniq) <= max_bins:
            thr = 0.5 * (uniq[:-1] + uniq[1:])
        else:
            qs = np.quantile(X[:, j], np.linspace(0.0, 1.0, max_bins + 1)[1:-1])
            thr = np.unique(qs)
        thresholds.append(thr)
    return thresholds


def bin_matrix(X: np.ndarray, thresholds: list[np.ndarray]) -> np.ndarray:
    """bin b holds values in (thr[b-1], thr[b]]; splitting at thr[b] sends bins <= b left."""
    Xb = np.empty(X.shape, dtype=np.int64)
    for j, thr in enumerate(thresholds):
        Xb[:, j] = np.searchsorted(thr, X[:, j], side="left")
    return Xb


@dataclass
class Tree:
    feature: np.ndarray    # int, -1 at leaves
    threshold: np.ndarray  # float
    left: np.ndarray       # int child ids, -1 at leaves
    right: np.ndarray
    value: np.ndarray      # float leaf payloads (mean of targets)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "Tree":
        return Tree(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=np.float64),
        )


def grow_tree(Xb: np.ndarray, thresholds: list[np.ndarray], y: np.ndarray,
              max_depth: int, min_leaf: int,
              rows: np.ndarray | None = None,
              feat_ids: np.ndarray | None = None) -> Tree:
    """Grow one regression tree on binned data.

    rows may repeat (bootstrap); feat_ids restricts candidate features and must
    be ascending so tie-breaking still prefers the lowest feature index.
    """
    if rows is None:
        rows = np.arange(Xb.shape[0])
    if feat_ids is None:
        feat_ids = np.arange(Xb.shape[1])
    feature = [-1]
    threshold = [0.0]
    left = [-1]
    right = [-1]
    value = [0.0]

    ysub = y[rows]
    node_of = np.zeros(len(rows), dtype=np.int64)  # index into `active`
    active = [0]
    depth = 0
    while active:
        A = len(active)
        cnt = np.bincount(node_of, minlength=A).astype(np.float64)
        tot = np.bincount(node_of, weights=ysub, minlength=A)
        best_gain = np.zeros(A)
        best_feat = np.full(A, -1, dtype=np.int64)
        best_bin = np.full(A, -1, dtype=np.int64)
        if depth < max_depth:
            parent_term = (tot ** 2) / cnt
            for f in feat_ids:
                nb = len(thresholds[f]) + 1
                if nb <= 1:
                    continue
                key = node_of * nb + Xb[rows, f]
                c = np.bincount(key, minlength=A * nb).reshape(A, nb)
                s = np.bincount(key, weights=ysub, minlength=A * nb).reshape(A, nb)
                cl = np.cumsum(c, axis=1)[:, :-1]
                sl = np.cumsum(s, axis=1)[:, :-1]
                cr = cnt[:, None] - cl
                sr = tot[:, None] - sl
                ok = (cl >= min_leaf) & (cr >= min_leaf)
                with np.errstate(divide="ignore", invalid="ignore"):
                    gain = sl ** 2 / cl + sr ** 2 / cr - parent_term[:, None]
                gain[~ok] = -np.inf
                gb = np.argmax(gain, axis=1)  # first max: lowest threshold
                gv = gain[np.arange(A), gb]
                upd = gv > best_gain + GAIN_EPS  # strict: lowest feature wins ties
                best_gain[upd] = gv[upd]
                best_feat[upd] = f
                best_bin[upd] = gb[upd]

        new_active: list[int] = []
        child_base = np.full(A, -1, dtype=np.int64)
        for a, nd in enumerate(active):
            if best_feat[a] < 0:
                value[nd] = tot[a] / cnt[a]
                continue
            f = int(best_feat[a])
            feature[nd] = f
            threshold[nd] = float(thresholds[f][best_bin[a]])
            for child in ("l", "r"):
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(0.0)
            left[nd] = len(feature) - 2
            right[nd] = len(feature) - 1
            child_base[a] = len(new_active)
            new_active.extend([left[nd], right[nd]])
        if not new_active:
            break
        splitting = best_feat[node_of] >= 0
        rows = rows[splitting]
        ysub = ysub[splitting]
        parents = node_of[splitting]
        fv = Xb[rows, best_feat[parents]]
        go_left = fv <= best_bin[parents]
        node_of = child_base[parents] + np.where(go_left, 0, 1)
        active = new_active
        depth += 1

    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=np.float64),
    )


def predict_tree(tree: Tree, X: np.ndarray) -> np.ndarray:
    pos = np.zeros(X.shape[0], dtype=np.int64)
    pending = np.flatnonzero(tree.feature[pos] >= 0)
    while len(pending):
        nd = pos[pending]
        go_left = X[pending, tree.feature[nd]] <= tree.threshold[nd]
        pos[pending] = np.where(go_left, tree.left[nd], tree.right[nd])
        pending = pending[tree.feature[pos[pending]] >= 0]
    return tree.value[pos]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


# -- fitted-model states -------------------------------------------------------


def fit_decision_tree(X, y, max_depth: int, min_leaf: int) -> dict:
    thr = make_bins(X)
    Xb = bin_matrix(X, thr)
    tree = grow_tree(Xb, thr, y, max_depth, min_leaf)
    return {"tree": tree}


def fit_random_forest(X, y, n_trees: int, max_depth: int, feature_frac: float,
                      seed: int, min_leaf: int = 1) -> dict:
    n, p = X.shape
    thr = make_bins(X)
    Xb = bin_matrix(X, thr)
    m = max(1, int(np.ceil(feature_frac * p)))
    trees, feats = [], []
    for t in range(n_trees):
        rng = np.random.default_rng([seed, t])
        rows = rng.integers(0, n, size=n)
        chosen = np.sort(rng.choice(p, size=m, replace=False))
        trees.append(grow_tree(Xb, thr, y, max_depth, min_leaf, rows=rows, feat_ids=chosen))
        feats.append(chosen)
    return {"trees": trees, "features": feats}


def predict_forest(state: dict, X: np.ndarray) -> np.ndarray:
    preds = [predict_tree(t, X) for t in state["trees"]]
    return np.mean(preds, axis=0)


def fit_gradient_boosting(X, y, rounds: int, rate: float, max_depth: int,
                          classification: bool, min_leaf: int = 1,
                          subsample: float = 1.0, seed: int = 0) -> dict:
    """Stagewise trees on negative gradients with least-squares leaf values.

    Classification boosts the log-odds under log loss; regression boosts the
    squared error. The default is fully deterministic; subsample < 1 draws a
    seeded row subset per round.
    """
    thr = make_bins(X)
    Xb = bin_matrix(X, thr)
    if classification:
        pbar = np.clip(y.mean(), 1e-12, 1.0 - 1e-12)
        f0 = float(np.log(pbar / (1.0 - pbar)))
    else:
        f0 = float(y.mean())
    n = len(y)
    F = np.full(n, f0)
    Xrep = bin_to_raw(Xb, thr)
    trees = []
    losses = []
    for m in range(rounds):
        residual = y - (_sigmoid(F) if classification else F)
        rows = None
        if subsample < 1.0:
            rng = np.random.default_rng([seed, m])
            rows = np.sort(rng.choice(n, size=max(1, int(subsample * n)),
                                      replace=False))
        tree = grow_tree(Xb, thr, residual, max_depth, min_leaf, rows=rows)
        F = F + rate * predict_tree(tree, Xrep)
        trees.append(tree)
        losses.append(_log_loss(y, _sigmoid(F)) if classification
                      else float(np.mean((y - F) ** 2)))
    return {"f0": f0, "rate": rate, "trees": trees,
            "classification": classification, "train_losses": losses}


def bin_to_raw(Xb: np.ndarray, thresholds: list[np.ndarray]) -> np.ndarray:
    """Representative raw values for binned rows, for in-fit tree evaluation.

    Bin b holds values in (thr[b-1], thr[b]], so thr[b] (and thr[-1]+1 for the
    top bin) routes through every split exactly as the original value does.
    """
    out = np.empty(Xb.shape, dtype=np.float64)
    for j, thr in enumerate(thresholds):
        if len(thr) == 0:
            out[:, j] = 0.0
            continue
        grid = np.concatenate([thr, [thr[-1] + 1.0]])
        out[:, j] = grid[Xb[:, j]]
    return out


def predict_boosting(state: dict, X: np.ndarray) -> np.ndarray:
    F = np.full(X.shape[0], state["f0"])
    for tree in state["trees"]:
        F = F + state["rate"] * predict_tree(tree, X)
    if state["classification"]:
        return _sigmoid(F)
    return F
