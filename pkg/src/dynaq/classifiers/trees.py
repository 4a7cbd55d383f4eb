"""Histogram-based regression trees, the building block of the boosting model.

Features are pre-binned once per fit into equal-frequency bins; split search
then works on bin histograms of the gradient statistics, which keeps the cost
per node at one pass over the node's rows regardless of how many candidate
thresholds a feature has.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MIN_GAIN = 1e-12
_HESS_FLOOR = 1e-6
_LEAF_CLIP = 10.0


def equal_frequency_bins(X: np.ndarray, nbins: int) -> list[np.ndarray]:
    """Per-feature interior edges at equal-frequency quantiles (deduplicated)."""
    if nbins < 2:
        raise ValueError(f"nbins must be at least 2, got {nbins}")
    qs = np.linspace(0.0, 1.0, nbins + 1)[1:-1]
    edges = []
    for k in range(X.shape[1]):
        col = X[:, k]
        e = np.unique(np.quantile(col, qs))
        # an edge at or above the column max can never split anything off
        e = e[e < col.max()] if e.size else e
        edges.append(e.astype(np.float64))
    return edges

def bin_codes(X: np.ndarray, edges: list[np.ndarray]) -> np.ndarray:
    """Map values to bin indices such that code <= b  <=>  x <= edges[b]."""
    codes = np.empty(X.shape, dtype=np.int32)
    for k, e in enumerate(edges):
        codes[:, k] = np.searchsorted(e, X[:, k], side="left")
    return codes


@dataclass
class Tree:
    """Packed binary tree. feature < 0 marks a leaf; routing is x <= threshold."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    depth: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int32)
        rows = np.arange(n)
        for _ in range(self.depth):
            feat = self.feature[node]
            at_leaf = feat < 0
            if at_leaf.all():
                break
            fx = X[rows, np.maximum(feat, 0)]
            go_left = fx <= self.threshold[node]
            nxt = np.where(go_left, self.left[node], self.right[node])
            node = np.where(at_leaf, node, nxt)
        return self.value[node]


def build_tree(
    codes: np.ndarray,
    edges: list[np.ndarray],
    grad: np.ndarray,
    hess: np.ndarray,
    rows: np.ndarray,
    max_depth: int,
    min_rows: int,
    col_sample_rate: float,
    rng: np.random.Generator,
) -> Tree:
    """Fit one least-squares tree to the gradient with Newton leaf values.

    Splits maximize the variance-reduction gain of the gradient over the
    histogram bins; leaves take sum(grad)/sum(hess), floored and clipped for
    stability. ``rows`` selects the (possibly subsampled) training rows;
    ``col_sample_rate`` < 1 draws a random feature subset per split attempt.
    """
    n_features = codes.shape[1]
    bins_per_col = np.array([len(e) + 1 for e in edges], dtype=np.int64)
    n_cols = max(1, int(math.ceil(col_sample_rate * n_features)))

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def leaf_value(rws: np.ndarray) -> float:
        g = float(grad[rws].sum())
        h = float(hess[rws].sum())
        v = g / max(h, _HESS_FLOOR)
        return float(np.clip(v, -_LEAF_CLIP, _LEAF_CLIP))

    def best_split(rws: np.ndarray, cols: np.ndarray):
        c = codes[rws][:, cols]
        nb = bins_per_col[cols]
        offs = np.concatenate(([0], np.cumsum(nb)[:-1]))
        flat = (c + offs[None, :]).ravel()
        total = int(nb.sum())
        rep_g = np.repeat(grad[rws], cols.size)
        gs = np.bincount(flat, weights=rep_g, minlength=total)
        ns = np.bincount(flat, minlength=total)
        n = rws.size
        g_tot = float(grad[rws].sum())
        base = g_tot * g_tot / n
        found = None
        best_gain = _MIN_GAIN
        for ci in range(cols.size):
            b = int(nb[ci])
            if b < 2:
                continue
            sl = slice(int(offs[ci]), int(offs[ci]) + b)
            cg = np.cumsum(gs[sl])[:-1]
            cn = np.cumsum(ns[sl])[:-1]
            nr = n - cn
            ok = (cn >= min_rows) & (nr >= min_rows)
            if not ok.any():
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                gain = cg * cg / cn + (g_tot - cg) ** 2 / nr - base
            gain = np.where(ok, gain, -np.inf)
            bi = int(np.argmax(gain))
            if gain[bi] > best_gain:
                best_gain = float(gain[bi])
                found = (int(cols[ci]), bi)
        return found

    def grow(rws: np.ndarray, depth: int) -> int:
        i = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        if depth >= max_depth or rws.size < 2 * min_rows:
            value[i] = leaf_value(rws)
            return i
        if n_cols < n_features:
            cols = np.sort(rng.choice(n_features, size=n_cols, replace=False))
        else:
            cols = np.arange(n_features)
        found = best_split(rws, cols)
        if found is None:
            value[i] = leaf_value(rws)
            return i
        f, b = found
        feature[i] = f
        threshold[i] = float(edges[f][b])
        go_left = codes[rws, f] <= b
        left[i] = grow(rws[go_left], depth + 1)
        right[i] = grow(rws[~go_left], depth + 1)
        return i

    grow(np.asarray(rows), 0)
    return Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=np.asarray(value, dtype=np.float64),
        depth=max_depth,
    )
