"""Shared fixtures: small deterministic datasets and helper factories."""
import numpy as np
import pytest

from dynaq.data import Dataset
from dynaq.synth import make_dataset, make_shifted_pair


@pytest.fixture(scope="session")
def tiny_dataset() -> Dataset:
    """200-row synthetic set, 8 features, both classes present."""
    return make_dataset(200, n_features=8, seed=42, name="tiny")


@pytest.fixture(scope="session")
def small_pair():
    """(pool, evaluation) shifted pair, small enough for loop tests."""
    return make_shifted_pair(n_pool=400, n_eval=300, n_features=10, seed=7)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def make_separable(n: int, n_features: int = 6, seed: int = 0) -> Dataset:
    """Linearly separable two-class set; easy mode for classifier tests."""
    g = np.random.default_rng(seed)
    half = n // 2
    neg = g.normal(-2.0, 0.6, size=(half, n_features))
    pos = g.normal(2.0, 0.6, size=(n - half, n_features))
    X = np.vstack([neg, pos])
    y = np.concatenate([np.zeros(half, dtype=np.int8), np.ones(n - half, dtype=np.int8)])
    perm = g.permutation(n)
    names = tuple(f"f{i}" for i in range(n_features))
    return Dataset(features=X[perm], labels=y[perm], feature_names=names, name="sep")


@pytest.fixture(scope="session")
def separable():
    return make_separable(160, seed=3)
