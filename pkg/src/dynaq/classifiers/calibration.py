"""Probability re-centering and threshold calibration.

A classifier trained on a skewed pool rarely has its best operating point at
0.5. Instead of moving the decision rule, the calibrated threshold theta is
folded back into the probabilities: a monotone transform maps raw probability
theta to exactly 0.5, so the usual >= 0.5 rule applies downstream and the
certainty score keeps its meaning.
"""
from __future__ import annotations

import numpy as np


def transform_prob(y_raw, theta: float):
    """Re-center raw probabilities so that ``theta`` maps to 0.5.

    Computes (1 - theta) * y / ((1 - 2 theta) * y + theta), which is
    continuously differentiable and monotone on [0, 1], fixes 0 and 1, and
    is the identity when theta is 0.5.

    Accepts scalars or arrays; returns the matching shape.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie strictly inside (0,1), got {theta}")
    y = np.asarray(y_raw, dtype=np.float64)
    out = (1.0 - theta) * y / ((1.0 - 2.0 * theta) * y + theta)
    if np.isscalar(y_raw) or np.ndim(y_raw) == 0:
        return float(out)
    return out


def best_f1_cut(probs: np.ndarray, truth: np.ndarray) -> tuple[float, float]:
    """Pick the probability cut maximizing F1 over held-out predictions.

    Candidate cuts are midpoints between consecutive distinct sorted
    probabilities, plus half the smallest probability (the operating point
    that predicts everything positive) when it is nonzero; predicted-positive
    means prob >= cut. Ties in F1 are broken toward the smaller cut. With no
    candidates at all the cut falls back to 0.5.

    Returns:
        (theta, f1_at_theta)
    """
    probs = np.asarray(probs, dtype=np.float64)
    truth = np.asarray(truth)
    if probs.size == 0:
        raise ValueError("cannot calibrate a cut on an empty sample")
    order = np.argsort(-probs, kind="stable")
    ps = probs[order]
    ys = truth[order].astype(np.int64)
    n = ps.size
    pos_total = int(ys.sum())

    # last index of each distinct probability value, descending; cutting at
    # the midpoint past boundary j predicts the first j+1 rows positive
    boundary = np.flatnonzero(np.diff(ps) != 0.0)
    cum_tp = np.cumsum(ys)
    cuts = list(0.5 * (ps[boundary] + ps[boundary + 1]))
    tps = list(cum_tp[boundary])
    npreds = list(boundary + 1)
    if ps[-1] > 0.0:
        cuts.append(0.5 * ps[-1])
        tps.append(pos_total)
        npreds.append(n)
    if not cuts:
        cut = 0.5
        pred = probs >= cut
        return cut, _f1_counts(int(np.sum(pred & (truth == 1))), int(pred.sum()), pos_total)

    f1 = np.array([_f1_counts(int(t), int(m), pos_total) for t, m in zip(tps, npreds)])
    best_ix = np.flatnonzero(f1 == f1.max())
    # equal F1 -> prefer the smaller cut
    best = int(best_ix[np.argmin(np.asarray(cuts)[best_ix])])
    return float(cuts[best]), float(f1[best])


def _f1_counts(tp: int, npred: int, npos: int) -> float:
    denom = npred + npos
    if denom == 0:
        return 0.0
    return 2.0 * tp / denom
