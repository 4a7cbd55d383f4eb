"""Tests for the per-class anomaly scorers."""
import math

import numpy as np
import pytest

from dynaq.anomaly import (
    ConstantScore,
    GaussianAnomalyModel,
    _avg_path_norm,
    anomaly_score,
    fit_class_scorers,
    score_by_class,
    split_by_class,
    train_gaussian_nb_anomaly,
    train_iforest,
)
from dynaq.errors import DegenerateModelError


class TestPathNorm:
    def test_small_cases(self):
        assert _avg_path_norm(0) == 0.0
        assert _avg_path_norm(1) == 0.0
        assert _avg_path_norm(2) == 1.0

    def test_matches_closed_form(self):
        euler = 0.5772156649015329
        for m in (3, 10, 256):
            expect = 2.0 * (math.log(m - 1.0) + euler) - 2.0 * (m - 1.0) / m
            assert _avg_path_norm(m) == pytest.approx(expect, abs=1e-12)

    def test_monotone_growth(self):
        vals = [_avg_path_norm(m) for m in range(2, 500)]
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestSplitByClass:
    def test_hand_example(self):
        labeled = np.array([0, 1, 2, 3])
        labels = np.array([0, 1, 1, 0])
        unlabeled = np.array([10, 11, 12])
        pred = np.array([1, 0, 1])
        pools = split_by_class(labeled, labels, unlabeled, pred)
        assert set(pools.benign.tolist()) == {0, 3, 11}
        assert set(pools.malicious.tolist()) == {1, 2, 10, 12}

    def test_partition_is_total(self):
        g = np.random.default_rng(1)
        labeled = np.arange(50)
        labels = g.integers(0, 2, 50)
        unlabeled = np.arange(100, 180)
        pred = g.integers(0, 2, 80)
        pools = split_by_class(labeled, labels, unlabeled, pred)
        merged = np.sort(np.concatenate([pools.benign, pools.malicious]))
        assert np.array_equal(merged, np.sort(np.concatenate([labeled, unlabeled])))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            split_by_class(np.array([0]), np.array([1]), np.array([1, 2]), np.array([0]))


class TestIsolationForest:
    def test_deterministic_across_calls(self):
        g = np.random.default_rng(2)
        X = g.normal(size=(300, 5))
        f1_ = train_iforest(X, n_trees=30, subsample=64, seed=9)
        f2_ = train_iforest(X, n_trees=30, subsample=64, seed=9)
        probe = g.normal(size=(40, 5))
        assert np.array_equal(f1_.score(probe), f2_.score(probe))

    def test_seed_changes_model(self):
        g = np.random.default_rng(3)
        X = g.normal(size=(300, 5))
        fa = train_iforest(X, n_trees=30, subsample=64, seed=1)
        fb = train_iforest(X, n_trees=30, subsample=64, seed=2)
        probe = g.normal(size=(40, 5))
        assert not np.array_equal(fa.score(probe), fb.score(probe))

    def test_scores_in_unit_interval(self):
        g = np.random.default_rng(4)
        X = g.normal(size=(400, 6))
        f = train_iforest(X, n_trees=50, subsample=128, seed=0)
        s = f.score(g.normal(size=(100, 6)))
        assert np.all(s > 0.0) and np.all(s <= 1.0)

    def test_uniform_data_scores_near_half(self):
        # classic normalization property: random points in a uniform cloud
        # have average path near c(psi), giving scores around 0.5
        for seed in range(10):
            g = np.random.default_rng(seed)
            X = g.random((512, 4))
            f = train_iforest(X, n_trees=100, subsample=256, seed=seed)
            mean_score = float(f.score(X).mean())
            assert 0.35 <= mean_score <= 0.55

    def test_far_outlier_outscores_inliers(self):
        g = np.random.default_rng(5)
        X = g.normal(0.0, 1.0, size=(500, 4))
        f = train_iforest(X, n_trees=100, subsample=256, seed=7)
        inlier_scores = f.score(X)
        outlier = np.full((1, 4), 100.0)
        assert f.score(outlier)[0] > np.percentile(inlier_scores, 95)

    def test_subsample_capped_by_pool(self):
        g = np.random.default_rng(6)
        X = g.normal(size=(10, 3))
        f = train_iforest(X, n_trees=10, subsample=256, seed=0)
        assert f.subsample_size == 10

    def test_degenerate_pool_raises(self):
        with pytest.raises(DegenerateModelError):
            train_iforest(np.ones((1, 4)))

    def test_rejects_bad_shapes_and_params(self):
        with pytest.raises(ValueError):
            train_iforest(np.ones(5))
        with pytest.raises(ValueError):
            train_iforest(np.ones((5, 2)), n_trees=0)
        with pytest.raises(ValueError):
            train_iforest(np.ones((5, 2)), subsample=1)

    def test_identical_rows_isolate_slowly(self):
        # duplicated points cannot be isolated: long paths, low scores
        X = np.zeros((64, 3))
        f = train_iforest(X, n_trees=20, subsample=64, seed=0)
        s = f.score(X)
        assert np.all(s <= 0.6)


class TestGaussianModel:
    def test_training_scores_are_uniform_ranks(self):
        g = np.random.default_rng(7)
        X = g.normal(size=(100, 3))
        m = train_gaussian_nb_anomaly(X)
        s = np.sort(m.score(X))
        expect = np.arange(1, 101) / 100.0
        assert np.allclose(s, expect, atol=1e-12)

    def test_far_point_scores_one(self):
        g = np.random.default_rng(8)
        X = g.normal(size=(50, 3))
        m = train_gaussian_nb_anomaly(X)
        assert m.score(np.full((1, 3), 60.0))[0] == 1.0

    def test_center_scores_low(self):
        g = np.random.default_rng(9)
        X = g.normal(size=(200, 3))
        m = train_gaussian_nb_anomaly(X)
        s = m.score(np.zeros((1, 3)))[0]
        assert s <= 0.2

    def test_clip_floor(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        m = train_gaussian_nb_anomaly(X)
        # nothing can score 0: floor is 1/(2n)
        s = m.score(np.array([[1.4]]))
        assert s[0] >= 1.0 / 8.0

    def test_degenerate(self):
        with pytest.raises(DegenerateModelError):
            train_gaussian_nb_anomaly(np.ones((1, 2)))

    def test_constant_feature_variance_floored(self):
        X = np.column_stack([np.ones(30), np.linspace(0, 1, 30)])
        m = train_gaussian_nb_anomaly(X)
        assert np.all(m.var >= 1e-9)
        assert np.isfinite(m.score(X)).all()


class TestScoreByClass:
    def test_routing(self):
        scorers = (ConstantScore(0.2), ConstantScore(0.9))
        X = np.zeros((6, 2))
        c_hat = np.array([0, 1, 0, 1, 1, 0])
        out = score_by_class(X, c_hat, scorers)
        assert np.allclose(out, [0.2, 0.9, 0.2, 0.9, 0.9, 0.2])

    def test_single_row_wrapper(self):
        scorers = (ConstantScore(0.3), ConstantScore(0.7))
        assert anomaly_score(np.zeros(4), scorers, 0) == 0.3
        assert anomaly_score(np.zeros(4), scorers, 1) == 0.7
        with pytest.raises(ValueError):
            anomaly_score(np.zeros(4), scorers, 2)


class TestFitClassScorers:
    def test_degenerate_pool_falls_back(self, tiny_dataset):
        X = tiny_dataset.features
        pools = split_by_class(
            np.array([0, 1], dtype=np.int64),
            np.array([1, 1]),  # no benign labeled rows
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.int8),
        )
        scorers = fit_class_scorers(X, pools, kind="iforest", seed=0)
        assert isinstance(scorers[0], ConstantScore)
        assert not isinstance(scorers[1], ConstantScore)

    def test_gaussian_kind(self, tiny_dataset):
        X = tiny_dataset.features
        y = tiny_dataset.labels
        idx = np.arange(tiny_dataset.n_rows)
        pools = split_by_class(idx, y, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int8))
        scorers = fit_class_scorers(X, pools, kind="gaussian")
        assert isinstance(scorers[0], GaussianAnomalyModel)
        assert isinstance(scorers[1], GaussianAnomalyModel)

    def test_unknown_kind(self, tiny_dataset):
        X = tiny_dataset.features
        idx = np.arange(tiny_dataset.n_rows)
        pools = split_by_class(
            idx, tiny_dataset.labels, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int8)
        )
        with pytest.raises(ValueError):
            fit_class_scorers(X, pools, kind="mystery")

    def test_iforest_seeds_differ_per_class(self, tiny_dataset):
        # both classes get a real forest trained on their own pool
        X = tiny_dataset.features
        y = tiny_dataset.labels
        idx = np.arange(tiny_dataset.n_rows)
        pools = split_by_class(idx, y, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int8))
        scorers = fit_class_scorers(X, pools, kind="iforest", n_trees=10, subsample=32, seed=3)
        probe = X[:20]
        assert not np.array_equal(scorers[0].score(probe), scorers[1].score(probe))
