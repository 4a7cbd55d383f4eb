"""Synthetic network-flow-like datasets.

Two generators: a generic two-cluster-per-class mixture for unit tests and
demos, and a shifted train/eval pair whose evaluation set over-represents
rare attack clusters that are nearly absent from the training pool.  The
shifted pair mimics the structure that makes guided querying pay off: a
handful of isolated attack modes sit far from everything the initial model
has seen, and the evaluation data weights them heavily.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .data import Dataset
from .rng import SYNTH, stream

_INFORMATIVE = 6

# Fixed cluster geometry on the informative dims.  Benign and common attack
# modes overlap moderately; rare attack modes are isolated outposts.
_BENIGN_CENTERS = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0, -2.0, 1.0, 0.0, 2.0, -1.0],
    [-3.0, 2.0, -2.0, 1.0, -1.0, 0.0],
])
_BENIGN_WEIGHTS = np.array([0.5, 0.3, 0.2])
_COMMON_ATTACK_CENTERS = np.array([
    [1.8, 1.8, -1.2, -1.8, 0.8, 1.2],
    [-1.5, -2.2, 2.0, 1.6, -1.8, 0.5],
])
_RARE_ATTACK_CENTERS = np.array([
    [7.0, 7.0, 6.0, -6.0, 7.0, -7.0],
    [-7.0, -6.0, 7.0, 6.0, -7.0, 7.0],
])
_ATTACK_CENTERS = np.vstack([_COMMON_ATTACK_CENTERS, _RARE_ATTACK_CENTERS])
_ATTACK_STDS = np.array([1.1, 1.1, 0.7, 0.7])

# Attack-mode mix: rare modes are ~2% of pool attacks but ~36% of
# evaluation attacks.
POOL_ATTACK_WEIGHTS = np.array([0.55, 0.43, 0.013, 0.007])
EVAL_ATTACK_WEIGHTS = np.array([0.36, 0.28, 0.20, 0.16])
POOL_POSITIVE_FRACTION = 0.45
EVAL_POSITIVE_FRACTION = 0.55


def _sample_clusters(rng: np.random.Generator, centers: np.ndarray,
                     stds: np.ndarray, weights: np.ndarray,
                     n: int, n_features: int) -> np.ndarray:
    counts = rng.multinomial(n, weights / weights.sum())
    x = rng.standard_normal((n, n_features))
    row = 0
    for c, (center, sd) in enumerate(zip(centers, stds)):
        k = counts[c]
        x[row:row + k, :_INFORMATIVE] *= sd
        x[row:row + k, :_INFORMATIVE] += center
        row += k
    return x


def _assemble(rng: np.random.Generator, benign: np.ndarray,
              attacks: np.ndarray, name: str) -> Dataset:
    x = np.vstack([benign, attacks])
    y = np.concatenate([np.zeros(len(benign), dtype=np.int8),
                        np.ones(len(attacks), dtype=np.int8)])
    order = rng.permutation(len(x))
    names = tuple(f"f{i}" for i in range(x.shape[1]))
    return Dataset(x[order], y[order], name=name, feature_names=names)


def make_dataset(n_rows: int, n_features: int = 16, pos_fraction: float = 0.45,
                 seed: int = 0, name: str = "synthetic",
                 attack_weights: Optional[Sequence[float]] = None) -> Dataset:
    """One self-contained mixture dataset (pool-distribution attack mix)."""
    if n_features < _INFORMATIVE:
        raise ValueError(f"n_features must be at least {_INFORMATIVE}")
    rng = stream(seed, SYNTH, 0)
    n_attack = int(round(n_rows * pos_fraction))
    n_benign = n_rows - n_attack
    w = np.asarray(attack_weights if attack_weights is not None
                   else POOL_ATTACK_WEIGHTS, dtype=np.float64)
    benign = _sample_clusters(rng, _BENIGN_CENTERS,
                              np.ones(len(_BENIGN_CENTERS)), _BENIGN_WEIGHTS,
                              n_benign, n_features)
    attacks = _sample_clusters(rng, _ATTACK_CENTERS, _ATTACK_STDS, w,
                               n_attack, n_features)
    return _assemble(rng, benign, attacks, name)


def make_shifted_pair(n_pool: int = 2125, n_eval: int = 1500,
                      n_features: int = 16, seed: int = 0):
    """Training pool plus distribution-shifted evaluation set.

    Returns (pool, evaluation).  Both share cluster geometry; the evaluation
    set carries a higher positive fraction and a far larger share of the two
    rare attack modes, so metrics on it reward finding those modes early.
    """
    rng = stream(seed, SYNTH, 1)
    n_attack = int(round(n_pool * POOL_POSITIVE_FRACTION))
    pool = _assemble(
        rng,
        _sample_clusters(rng, _BENIGN_CENTERS, np.ones(3), _BENIGN_WEIGHTS,
                         n_pool - n_attack, n_features),
        _sample_clusters(rng, _ATTACK_CENTERS, _ATTACK_STDS,
                         POOL_ATTACK_WEIGHTS, n_attack, n_features),
        "synthetic-pool")
    n_attack_ev = int(round(n_eval * EVAL_POSITIVE_FRACTION))
    evaluation = _assemble(
        rng,
        _sample_clusters(rng, _BENIGN_CENTERS, np.ones(3), _BENIGN_WEIGHTS,
                         n_eval - n_attack_ev, n_features),
        _sample_clusters(rng, _ATTACK_CENTERS, _ATTACK_STDS,
                         EVAL_ATTACK_WEIGHTS, n_attack_ev, n_features),
        "synthetic-eval")
    return pool, evaluation


def write_dataset_csv(dataset: Dataset, path) -> None:
    """Dump with a header row and a trailing numeric label column."""
    names = dataset.feature_names or tuple(
        f"f{i}" for i in range(dataset.n_features))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(names) + ",label\n")
        for row, lab in zip(dataset.features, dataset.labels):
            fh.write(",".join(repr(float(v)) for v in row) + f",{int(lab)}\n")
