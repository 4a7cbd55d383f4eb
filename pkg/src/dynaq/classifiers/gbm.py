"""Gradient-boosted trees for binary classification, with CV threshold calibration.

Boosting minimizes binomial deviance: each round fits a histogram regression
tree to the residual y - p and applies a Newton leaf step, scaled by an
(optionally annealed) learning rate. Training k folds first yields pooled
out-of-fold probabilities from which the operating threshold is calibrated;
the final model is then fit on the whole pool.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegeneratePoolError
from .calibration import best_f1_cut, transform_prob
from .trees import Tree, bin_codes, build_tree, equal_frequency_bins

#: config keys accepted for compatibility with common toolkits but without effect
IGNORED_KNOBS = (
    "histogram_type",
    "nbins_cats",
    "col_sample_rate_per_tree",
    "col_sample_rate_change_per_level",
)


@dataclass(frozen=True)
class GbmHyperParams:
    ntrees: int = 50
    max_depth: int = 4
    learn_rate: float = 0.125
    learn_rate_annealing: float = 1.0
    sample_rate: float = 1.0
    col_sample_rate: float = 1.0
    min_rows: int = 6
    nbins: int = 16
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.ntrees < 1:
            raise ValueError("ntrees must be at least 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        for name in ("learn_rate", "learn_rate_annealing", "sample_rate", "col_sample_rate"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0,1], got {v}")
        if self.min_rows < 1:
            raise ValueError("min_rows must be at least 1")
        if self.nbins < 2:
            raise ValueError("nbins must be at least 2")
        unknown = set(self.extra) - set(IGNORED_KNOBS)
        if unknown:
            raise ValueError(f"unknown extra keys: {sorted(unknown)}")


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


@dataclass
class GbmEnsemble:
    """Additive model: base log-odds plus rate-weighted tree outputs."""

    base_score: float
    trees: list[Tree]
    rates: list[float]
    n_features: int

    def raw(self, X: np.ndarray) -> np.ndarray:
        F = np.full(X.shape[0], self.base_score, dtype=np.float64)
        for tree, rate in zip(self.trees, self.rates):
            F += rate * tree.predict(X)
        return _sigmoid(F)


@dataclass
class ConstantModel:
    """Fallback for degenerate pools: the class prior everywhere."""

    prior: float
    n_features: int

    def raw(self, X: np.ndarray) -> np.ndarray:
        return np.full(X.shape[0], self.prior, dtype=np.float64)


@dataclass
class LinearModel:
    """Standardized-input logistic model (see logreg.py)."""

    weights: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray
    n_features: int

    def raw(self, X: np.ndarray) -> np.ndarray:
        z = (X - self.mean) / self.scale @ self.weights + self.bias
        return _sigmoid(z)


@dataclass
class TrainedClassifier:
    """A fitted model plus its calibrated threshold.

    ``predict`` folds the threshold into the probabilities, so callers always
    work on a scale where 0.5 is the decision boundary.
    """

    model: object
    theta: float
    kind: str  # "gbm" | "logreg" | "constant"
    n_features: int
    oof_f1: float | None = None

    def raw(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(
                f"expected rows of width {self.n_features}, got shape {X.shape}"
            )
        return self.model.raw(X)

    def predict(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (transformed probabilities, hard classes)."""
        y_hat = transform_prob(self.raw(X), self.theta)
        return y_hat, (y_hat >= 0.5).astype(np.int8)


def fit_boosting(
    X: np.ndarray, y: np.ndarray, params: GbmHyperParams, rng: np.random.Generator
) -> GbmEnsemble:
    """Fit the boosting ensemble on one pool (no CV, no calibration)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, n_feat = X.shape
    prior = float(np.clip(y.mean(), 1e-12, 1.0 - 1e-12))
    base = float(np.log(prior / (1.0 - prior)))
    if len(np.unique(y)) < 2:
        return GbmEnsemble(base_score=base, trees=[], rates=[], n_features=n_feat)

    edges = equal_frequency_bins(X, params.nbins)
    codes = bin_codes(X, edges)
    F = np.full(n, base, dtype=np.float64)
    trees: list[Tree] = []
    rates: list[float] = []
    all_rows = np.arange(n)
    for m in range(params.ntrees):
        rate = params.learn_rate * params.learn_rate_annealing**m
        p = _sigmoid(F)
        grad = y - p
        hess = p * (1.0 - p)
        if params.sample_rate < 1.0:
            take = max(1, int(round(params.sample_rate * n)))
            rows = np.sort(rng.choice(n, size=take, replace=False))
        else:
            rows = all_rows
        tree = build_tree(
            codes,
            edges,
            grad,
            hess,
            rows,
            params.max_depth,
            params.min_rows,
            params.col_sample_rate,
            rng,
        )
        F += rate * tree.predict(X)
        trees.append(tree)
        rates.append(rate)
    return GbmEnsemble(base_score=base, trees=trees, rates=rates, n_features=n_feat)


def stratified_folds(y: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Assign each row a fold id in [0,k), keeping class balance across folds."""
    fold = np.empty(len(y), dtype=np.int32)
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        fold[idx] = np.arange(idx.size) % k
    return fold


def train_gbm(
    X: np.ndarray,
    y: np.ndarray,
    params: GbmHyperParams,
    k: int = 5,
    seed: int = 0,
) -> TrainedClassifier:
    """Train the boosted classifier with k-fold calibrated threshold.

    Args:
        X: feature matrix of the labeled pool.
        y: binary labels (0 benign, 1 malicious).
        params: boosting hyperparameters.
        k: fold count for the calibration CV.
        seed: determinism root; same inputs and seed give bit-identical models.

    Raises:
        DegeneratePoolError: single-class pool.
        ValueError: k larger than the pool or < 2.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int8)
    n = len(y)
    if k < 2:
        raise ValueError(f"fold count must be at least 2, got {k}")
    if k > n:
        raise ValueError(f"fold count {k} exceeds pool size {n}")
    if len(np.unique(y)) < 2:
        raise DegeneratePoolError("training pool contains a single class")

    root = np.random.SeedSequence(seed)
    ss_assign, ss_final, *ss_folds = root.spawn(k + 2)
    folds = stratified_folds(y, k, np.random.Generator(np.random.PCG64(ss_assign)))

    oof = np.empty(n, dtype=np.float64)
    for i in range(k):
        va = folds == i
        tr = ~va
        y_tr = y[tr]
        if va.sum() == 0:
            continue
        if len(np.unique(y_tr)) < 2:
            oof[va] = float(np.clip(y_tr.mean(), 1e-12, 1.0 - 1e-12))
            continue
        rng_i = np.random.Generator(np.random.PCG64(ss_folds[i]))
        ens = fit_boosting(X[tr], y_tr, params, rng_i)
        oof[va] = ens.raw(X[va])

    theta, oof_f1 = best_f1_cut(oof, y)
    rng_final = np.random.Generator(np.random.PCG64(ss_final))
    final = fit_boosting(X, y, params, rng_final)
    return TrainedClassifier(
        model=final, theta=theta, kind="gbm", n_features=X.shape[1], oof_f1=oof_f1
    )


def constant_classifier(prior: float, n_features: int) -> TrainedClassifier:
    """Classifier for degenerate pools: predicts the prior everywhere."""
    prior = float(np.clip(prior, 1e-12, 1.0 - 1e-12))
    return TrainedClassifier(
        model=ConstantModel(prior=prior, n_features=n_features),
        theta=0.5,
        kind="constant",
        n_features=n_features,
    )


def log_loss(model: GbmEnsemble, X: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(model.raw(X), 1e-12, 1.0 - 1e-12)
    y = np.asarray(y, dtype=np.float64)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))
