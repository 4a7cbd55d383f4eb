"""Per-class anomaly scoring.

The active learner trains one anomaly model per predicted class each
iteration: isolation forests for the main method, a per-feature Gaussian
likelihood model for the baseline. Scores live in (0,1], higher = more
anomalous. Degenerate pools (< 2 rows) fall back to a constant 0.5 scorer so
query construction keeps working in the earliest iterations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateModelError

_EULER_GAMMA = 0.5772156649015329


def _avg_path_norm(m: int) -> float:
    """Expected search path length in a BST of m points (the c(m) normalizer)."""
    if m <= 1:
        return 0.0
    if m == 2:
        return 1.0
    h = math.log(m - 1.0) + _EULER_GAMMA
    return 2.0 * h - 2.0 * (m - 1.0) / m


def _avg_path_norm_vec(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    out = np.zeros_like(m)
    out[m == 2] = 1.0
    big = m > 2
    mb = m[big]
    out[big] = 2.0 * (np.log(mb - 1.0) + _EULER_GAMMA) - 2.0 * (mb - 1.0) / mb
    return out


@dataclass
class ClassConditionalPools:
    """Row indices for the benign and malicious model pools."""

    benign: np.ndarray
    malicious: np.ndarray


def split_by_class(
    labeled_idx: np.ndarray,
    labels: np.ndarray,
    unlabeled_idx: np.ndarray,
    pred_class: np.ndarray,
) -> ClassConditionalPools:
    """Split indices into per-class pools: labeled by true label, unlabeled by
    predicted class. Every index lands in exactly one pool."""
    labeled_idx = np.asarray(labeled_idx)
    unlabeled_idx = np.asarray(unlabeled_idx)
    labels = np.asarray(labels)
    pred_class = np.asarray(pred_class)
    if unlabeled_idx.size != pred_class.size:
        raise ValueError("every unlabeled index needs a predicted class")
    benign = np.concatenate([labeled_idx[labels == 0], unlabeled_idx[pred_class == 0]])
    malicious = np.concatenate([labeled_idx[labels == 1], unlabeled_idx[pred_class == 1]])
    return ClassConditionalPools(benign=benign, malicious=malicious)


@dataclass
class ConstantScore:
    """Fallback scorer for degenerate pools."""

    value: float = 0.5

    def score(self, X: np.ndarray) -> np.ndarray:
        return np.full(np.asarray(X).shape[0], self.value, dtype=np.float64)


@dataclass
class IsolationForest:
    """Packed forest of random-split trees.

    Node arrays are laid out as implicit binary heaps per tree: children of
    node i are 2i+1 and 2i+2. feature < 0 marks a leaf whose adjusted path
    length is stored in leaf_h.
    """

    feature: np.ndarray  # (n_trees, n_nodes) int32
    threshold: np.ndarray  # (n_trees, n_nodes) float64
    leaf_h: np.ndarray  # (n_trees, n_nodes) float64
    n_trees: int
    subsample_size: int
    height_limit: int
    n_features: int

    def mean_path_length(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        n = X.shape[0]
        rows = np.arange(n)
        total = np.zeros(n, dtype=np.float64)
        for t in range(self.n_trees):
            feat_t = self.feature[t]
            thr_t = self.threshold[t]
            node = np.zeros(n, dtype=np.int64)
            for _ in range(self.height_limit):
                f = feat_t[node]
                internal = f >= 0
                if not internal.any():
                    break
                fx = X[rows, np.maximum(f, 0)]
                nxt = 2 * node + 1 + (fx > thr_t[node])
                node = np.where(internal, nxt, node)
            total += self.leaf_h[t, node]
        return total / self.n_trees

    def score(self, X: np.ndarray) -> np.ndarray:
        """Normalized anomaly score s(x) = 2^(-E[h(x)] / c(subsample))."""
        norm = _avg_path_norm(self.subsample_size)
        return np.power(2.0, -self.mean_path_length(X) / norm)


def train_iforest(
    rows: np.ndarray, n_trees: int = 100, subsample: int = 256, seed: int = 0
) -> IsolationForest:
    """Train an isolation forest.

    Each tree works on its own uniform subsample (without replacement) of up
    to ``subsample`` rows, splitting on a uniformly chosen feature at a
    uniform point inside the node's min/max until rows are isolated or the
    height limit ceil(log2(subsample size)) is hit. Per-tree RNG streams are
    derived by tree index, so results do not depend on evaluation order.

    Raises:
        DegenerateModelError: fewer than 2 training rows.
    """
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got shape {X.shape}")
    n, n_feat = X.shape
    if n < 2:
        raise DegenerateModelError(f"isolation forest needs at least 2 rows, got {n}")
    if n_trees < 1:
        raise ValueError("n_trees must be at least 1")
    if subsample < 2:
        raise ValueError("subsample must be at least 2")

    psi = min(subsample, n)
    cap = max(1, math.ceil(math.log2(psi)))
    n_nodes = 2 ** (cap + 1) - 1

    rngs = [
        np.random.Generator(np.random.PCG64(ss))
        for ss in np.random.SeedSequence(seed).spawn(n_trees)
    ]
    samples = np.stack([r.choice(n, size=psi, replace=False) for r in rngs])
    S = X[samples]  # (T, psi, K)

    feature = np.full((n_trees, n_nodes), -1, dtype=np.int32)
    threshold = np.zeros((n_trees, n_nodes), dtype=np.float64)
    leaf_h = np.zeros((n_trees, n_nodes), dtype=np.float64)

    tree_of = np.repeat(np.arange(n_trees), psi)
    row_of = np.tile(np.arange(psi), n_trees)
    cur = np.zeros(n_trees * psi, dtype=np.int64)
    done = np.zeros(n_trees * psi, dtype=bool)
    flat_stride = n_nodes

    for depth in range(cap):
        width = 1 << depth
        lo = width - 1
        # each tree's stream yields this level's feature picks and split points,
        # one per slot, whether or not the slot is alive
        feats_lvl = np.stack([r.integers(0, n_feat, size=width) for r in rngs])
        us_lvl = np.stack([r.random(width) for r in rngs])

        alive = ~done
        if not alive.any():
            continue
        a_tree = tree_of[alive]
        a_row = row_of[alive]
        a_node = cur[alive]
        flat = a_tree * flat_stride + a_node

        counts = np.bincount(flat, minlength=n_trees * n_nodes)
        f_per_row = feats_lvl[a_tree, a_node - lo]
        v = S[a_tree, a_row, f_per_row]
        mn = np.full(n_trees * n_nodes, np.inf)
        mx = np.full(n_trees * n_nodes, -np.inf)
        np.minimum.at(mn, flat, v)
        np.maximum.at(mx, flat, v)

        node_cnt = counts[flat]
        node_mn = mn[flat]
        node_mx = mx[flat]
        splittable = (node_cnt >= 2) & (node_mx > node_mn)

        # rows whose node leafs out now (isolated or constant on the drawn feature)
        leafing = alive.copy()
        leafing[alive] = ~splittable
        if leafing.any():
            l_flat = tree_of[leafing] * flat_stride + cur[leafing]
            leaf_h[tree_of[leafing], cur[leafing]] = depth + _avg_path_norm_vec(counts[l_flat])
            done[leafing] = True

        if splittable.any():
            s_mask = alive.copy()
            s_mask[alive] = splittable
            s_tree = tree_of[s_mask]
            s_node = cur[s_mask]
            u = us_lvl[s_tree, s_node - lo]
            node_thr = mn[s_tree * flat_stride + s_node]
            node_rng = mx[s_tree * flat_stride + s_node] - node_thr
            thr = node_thr + u * node_rng
            feature[s_tree, s_node] = feats_lvl[s_tree, s_node - lo]
            threshold[s_tree, s_node] = thr
            go_right = S[s_tree, row_of[s_mask], feats_lvl[s_tree, s_node - lo]] > thr
            cur[s_mask] = 2 * s_node + 1 + go_right

    # rows still alive hit the height cap
    alive = ~done
    if alive.any():
        flat = tree_of[alive] * flat_stride + cur[alive]
        counts = np.bincount(flat, minlength=n_trees * n_nodes)
        leaf_h[tree_of[alive], cur[alive]] = cap + _avg_path_norm_vec(counts[flat])

    return IsolationForest(
        feature=feature,
        threshold=threshold,
        leaf_h=leaf_h,
        n_trees=n_trees,
        subsample_size=psi,
        height_limit=cap,
        n_features=n_feat,
    )


@dataclass
class GaussianAnomalyModel:
    """Per-feature Gaussian likelihood scorer with rank-normalized output.

    The score of a point is the fraction of training points whose negative
    log-likelihood it meets or exceeds, clipped into (0,1]. Over the training
    pool itself the scores are uniform ranks i/n.
    """

    mean: np.ndarray
    var: np.ndarray
    train_nll_sorted: np.ndarray
    n_features: int

    def _nll(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        z2 = (X - self.mean) ** 2 / self.var
        return 0.5 * np.sum(z2 + np.log(2.0 * np.pi * self.var), axis=1)

    def score(self, X: np.ndarray) -> np.ndarray:
        n = self.train_nll_sorted.size
        pos = np.searchsorted(self.train_nll_sorted, self._nll(X), side="right")
        return np.clip(pos / n, 1.0 / (2 * n), 1.0)


def train_gaussian_nb_anomaly(rows: np.ndarray) -> GaussianAnomalyModel:
    """Fit the per-feature Gaussian model; variances floored at 1e-9."""
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DegenerateModelError("gaussian anomaly model needs at least 2 rows")
    mean = X.mean(axis=0)
    var = np.maximum(X.var(axis=0), 1e-9)
    model = GaussianAnomalyModel(
        mean=mean, var=var, train_nll_sorted=np.empty(0), n_features=X.shape[1]
    )
    model.train_nll_sorted = np.sort(model._nll(X))
    return model


def anomaly_score(u: np.ndarray, forests: tuple, c_hat: int) -> float:
    """Score one row with the model matching its predicted class."""
    if c_hat not in (0, 1):
        raise ValueError(f"predicted class must be 0 or 1, got {c_hat}")
    row = np.asarray(u, dtype=np.float64).reshape(1, -1)
    return float(forests[c_hat].score(row)[0])


def score_by_class(X: np.ndarray, c_hat: np.ndarray, scorers: tuple) -> np.ndarray:
    """Score every row with the scorer of its predicted class. Vectorized."""
    X = np.asarray(X, dtype=np.float64)
    c_hat = np.asarray(c_hat)
    out = np.empty(X.shape[0], dtype=np.float64)
    for cls in (0, 1):
        m = c_hat == cls
        if m.any():
            out[m] = scorers[cls].score(X[m])
    return out


def fit_class_scorers(
    X: np.ndarray,
    pools: ClassConditionalPools,
    kind: str = "iforest",
    n_trees: int = 100,
    subsample: int = 256,
    seed: int = 0,
):
    """Train the per-class scorer pair, falling back to constant 0.5 on
    degenerate pools."""
    scorers = []
    for i, idx in enumerate((pools.benign, pools.malicious)):
        try:
            if kind == "iforest":
                scorers.append(
                    train_iforest(X[idx], n_trees=n_trees, subsample=subsample, seed=seed + i)
                )
            elif kind == "gaussian":
                scorers.append(train_gaussian_nb_anomaly(X[idx]))
            else:
                raise ValueError(f"unknown anomaly model kind: {kind}")
        except DegenerateModelError:
            scorers.append(ConstantScore(0.5))
    return tuple(scorers)
