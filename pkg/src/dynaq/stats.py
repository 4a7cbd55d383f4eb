"""Evaluation metrics and the statistical comparison protocol.

F1 on the evaluation set per iteration gives a learning curve; curves are
summarized by their trapezoidal area up to a reference iteration, and areas
of competing methods across simulations are compared with a one-sided paired
Wilcoxon signed-rank test. Includes the all-malicious dummy baseline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedTestError

#: report rows used by default, truncated to the configured horizon
T_REF_GRID = (9, 16, 22, 34, 47, 122, 247, 372)

SIGNIFICANCE = 0.05


def f1(predictions, truths) -> float:
    """F1 = 2TP / (2TP + FP + FN); 0 when the denominator is 0."""
    pred = np.asarray(predictions)
    truth = np.asarray(truths)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    if truth.size == 0:
        raise ValueError("truths must be nonempty")
    tp = int(np.count_nonzero((pred == 1) & (truth == 1)))
    fp = int(np.count_nonzero((pred == 1) & (truth == 0)))
    fn = int(np.count_nonzero((pred == 0) & (truth == 1)))
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 0.0
    return 2.0 * tp / denom


def coin_f1(truths) -> float:
    """F1 of the dummy that calls everything malicious."""
    truth = np.asarray(truths)
    return f1(np.ones_like(truth), truth)


def coin_f1_expected(positive_fraction: float) -> float:
    """Closed form of the dummy baseline: 2p / (1 + p)."""
    return 2.0 * positive_fraction / (1.0 + positive_fraction)


@dataclass
class LearningCurve:
    """Metric trajectory of one method in one simulation."""

    t: np.ndarray
    labeled: np.ndarray
    metric: np.ndarray
    method: str = ""
    sim: int = 0

    def __post_init__(self):
        self.t = np.asarray(self.t)
        self.labeled = np.asarray(self.labeled)
        self.metric = np.asarray(self.metric, dtype=np.float64)
        if not (self.t.size == self.labeled.size == self.metric.size):
            raise ValueError("curve fields must have equal lengths")
        if self.t.size and np.any(np.diff(self.t) <= 0):
            raise ValueError("iterations must be strictly increasing")


def curve_area(curve: LearningCurve, t_ref: int) -> float:
    """Trapezoidal area under the curve over t in [0, t_ref]."""
    if curve.t.size == 0 or t_ref < curve.t[0] or t_ref > curve.t[-1]:
        raise ValueError(f"t_ref={t_ref} outside curve range")
    m = curve.t <= t_ref
    return float(np.trapezoid(curve.metric[m], x=curve.t[m]))


def default_t_refs(T: int) -> list[int]:
    """The report grid truncated to the horizon, with the horizon itself
    always included as the final reference point."""
    rows = [t for t in T_REF_GRID if t < T]
    rows.append(T)
    return rows


def _doubled_ranks(abs_diffs: np.ndarray) -> np.ndarray:
    """Average ranks of |d|, doubled so ties yield exact integers."""
    order = np.argsort(abs_diffs, kind="stable")
    s = abs_diffs[order]
    n = s.size
    doubled = np.empty(n, dtype=np.int64)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and s[j + 1] == s[i]:
            j += 1
        # tie group occupies 1-based positions i+1 .. j+1; average rank
        # (i+1 + j+1)/2 doubles to an integer
        doubled[i : j + 1] = (i + 1) + (j + 1)
        i = j + 1
    out = np.empty(n, dtype=np.int64)
    out[order] = doubled
    return out


def _exact_tail_prob(doubled: np.ndarray, w2_obs: int) -> float:
    """P(W+ >= w2_obs / 2) under random signs, via coefficient counting."""
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    top = 0
    for d in doubled:
        d = int(d)
        new_top = top + d
        counts[d : new_top + 1] += counts[0 : top + 1]
        top = new_top
    tail = counts[w2_obs:].sum()
    return float(tail / 2.0 ** len(doubled))


def wilcoxon_one_sided(a, b) -> float:
    """One-sided paired Wilcoxon signed-rank p-value for median(a) > median(b).

    Zero differences are dropped; tied absolute differences get average
    ranks. The null distribution is exact for n <= 25 nonzero pairs and a
    normal approximation with continuity correction above that.

    Raises:
        UndefinedTestError: fewer than 5 nonzero differences.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"paired samples differ in length: {a.shape} vs {b.shape}")
    d = a - b
    d = d[d != 0.0]
    n = d.size
    if n < 5:
        raise UndefinedTestError(
            f"need at least 5 nonzero differences, got {n}"
        )
    doubled = _doubled_ranks(np.abs(d))
    w2 = int(doubled[d > 0].sum())

    if n <= 25:
        return _exact_tail_prob(doubled, w2)

    w = w2 / 2.0
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    # tie correction
    _, tie_counts = np.unique(doubled, return_counts=True)
    var -= float(np.sum(tie_counts.astype(np.float64) ** 3 - tie_counts)) / 48.0
    if var <= 0.0:
        return 1.0 if w <= mean else 0.0
    z = (w - mean - 0.5) / math.sqrt(var)
    return 0.5 * math.erfc(z / math.sqrt(2.0))
