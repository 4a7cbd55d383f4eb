"""Ridge-regularized logistic regression, the baseline method's classifier.

Fits by Newton iterations (IRLS) on internally standardized features. With
zero iterations the model stays at its all-zero initialization and predicts
0.5 everywhere. Training is deterministic; the seed parameter exists for
interface parity with the boosted classifier.
"""
from __future__ import annotations

import numpy as np

from ..errors import DegeneratePoolError
from .gbm import LinearModel, TrainedClassifier, _sigmoid

_SCALE_FLOOR = 1e-12
_STEP_TOL = 1e-10


def train_logreg(
    X: np.ndarray,
    y: np.ndarray,
    l2: float = 1e-3,
    iters: int = 50,
    seed: int = 0,
) -> TrainedClassifier:
    """Train the logistic model; threshold stays fixed at 0.5."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if l2 < 0:
        raise ValueError(f"l2 must be nonnegative, got {l2}")
    if iters < 0:
        raise ValueError(f"iters must be nonnegative, got {iters}")
    if len(np.unique(y)) < 2:
        raise DegeneratePoolError("training pool contains a single class")

    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale < _SCALE_FLOOR] = 1.0
    Xs = (X - mean) / scale
    n, n_feat = Xs.shape

    w = np.zeros(n_feat, dtype=np.float64)
    b = 0.0
    for _ in range(iters):
        z = Xs @ w + b
        p = _sigmoid(z)
        r = y - p
        wgt = np.maximum(p * (1.0 - p), 1e-9)
        # Newton system over [w, b] with ridge on w only
        Xw = Xs * wgt[:, None]
        H = np.empty((n_feat + 1, n_feat + 1), dtype=np.float64)
        H[:n_feat, :n_feat] = Xs.T @ Xw + l2 * np.eye(n_feat)
        H[:n_feat, n_feat] = Xw.sum(axis=0)
        H[n_feat, :n_feat] = H[:n_feat, n_feat]
        H[n_feat, n_feat] = wgt.sum()
        g = np.concatenate([Xs.T @ r - l2 * w, [r.sum()]])
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        w += step[:n_feat]
        b += float(step[n_feat])
        if np.max(np.abs(step)) < _STEP_TOL:
            break

    model = LinearModel(weights=w, bias=b, mean=mean, scale=scale, n_features=n_feat)
    return TrainedClassifier(model=model, theta=0.5, kind="logreg", n_features=n_feat)
