"""Tests for hyperparameter search, the trade-off selection rule, and the
inner-simulation dynamics tuning."""
import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynaq.classifiers import GbmHyperParams
from dynaq.dynamics import DynamicsParams
from dynaq.errors import TuningInfeasibleError
from dynaq.synth import make_dataset
from dynaq.tuning import (
    GBM_GRID,
    JASMINE_GRID,
    TuneResult,
    combo_to_params,
    decode_combo,
    grid_size,
    jasmine_tune,
    make_tune_partition,
    select_best,
    tune_gbm,
    write_gbm_report,
    write_jasmine_report,
)

TINY_GBM_GRID = {"ntrees": (4, 8), "max_depth": (2, 3)}
TINY_JAS_GRID = {"alpha_a0": (0.25, 0.5), "beta": (1.0,), "gamma": (1.0,),
                 "tau": (1.0 / 800,)}


class TestGrids:
    def test_sizes(self):
        assert grid_size(GBM_GRID) == 177147  # 3^11
        assert grid_size(JASMINE_GRID) == 108  # 3*3*3*4

    def test_decode_endpoints(self):
        first = decode_combo(GBM_GRID, 0)
        assert all(first[k] == v[0] for k, v in GBM_GRID.items())
        last = decode_combo(GBM_GRID, 177146)
        assert all(last[k] == v[-1] for k, v in GBM_GRID.items())

    def test_decode_mixed_radix(self):
        # index 1 moves only the first (least significant) dimension
        combo = decode_combo(GBM_GRID, 1)
        assert combo["ntrees"] == GBM_GRID["ntrees"][1]
        assert combo["max_depth"] == GBM_GRID["max_depth"][0]
        # index 3 wraps ntrees and advances max_depth
        combo = decode_combo(GBM_GRID, 3)
        assert combo["ntrees"] == GBM_GRID["ntrees"][0]
        assert combo["max_depth"] == GBM_GRID["max_depth"][1]

    def test_decode_bijective(self):
        seen = {tuple(decode_combo(TINY_GBM_GRID, i).items()) for i in range(4)}
        assert len(seen) == 4

    def test_decode_range_checked(self):
        with pytest.raises(ValueError):
            decode_combo(TINY_GBM_GRID, 4)
        with pytest.raises(ValueError):
            decode_combo(TINY_GBM_GRID, -1)

    def test_combo_to_params_split(self):
        combo = decode_combo(GBM_GRID, 0)
        params = combo_to_params(combo)
        assert params.ntrees == 250
        assert params.max_depth == 6
        assert set(params.extra) == {"nbins_cats", "col_sample_rate_per_tree",
                                     "col_sample_rate_change_per_level"}


class TestSelectBest:
    def test_faster_combo_wins_under_epsilon(self):
        results = [TuneResult({}, 0.90, 100.0), TuneResult({}, 0.899, 10.0)]
        chosen = select_best(results, epsilon=1e-4)
        assert chosen == 1
        assert results[1].chosen
        assert results[1].d_value == pytest.approx(0.001 / 90.0)

    def test_leader_keeps_win_over_epsilon(self):
        results = [TuneResult({}, 0.90, 100.0), TuneResult({}, 0.80, 10.0)]
        assert select_best(results, epsilon=1e-4) == 0
        assert results[1].d_value == pytest.approx(0.1 / 90.0)

    def test_single_combo(self):
        results = [TuneResult({}, 0.5, 1.0)]
        assert select_best(results, 1e-4) == 0

    def test_equal_metric_prefers_faster(self):
        results = [TuneResult({}, 0.9, 9.0), TuneResult({}, 0.9, 5.0)]
        assert select_best(results, 1e-4) == 1

    def test_smallest_d_among_qualifiers(self):
        results = [TuneResult({}, 0.900, 100.0),
                   TuneResult({}, 0.8999, 50.0),   # d = 2e-6
                   TuneResult({}, 0.8995, 10.0)]   # d ~ 5.6e-6
        chosen = select_best(results, epsilon=1e-4)
        assert chosen == 1

    def test_validation(self):
        with pytest.raises(TuningInfeasibleError):
            select_best([], 1e-4)
        with pytest.raises(ValueError):
            select_best([TuneResult({}, 0.5, 1.0)], 0.0)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(st.floats(0.0, 1.0), st.floats(0.0, 1000.0)),
                    min_size=1, max_size=8),
           st.floats(1e-6, 10.0))
    def test_never_picks_dominated_combo(self, pairs, epsilon):
        results = [TuneResult({}, h, t) for h, t in pairs]
        chosen = select_best(results, epsilon)
        h_c, t_c = results[chosen].metric, results[chosen].seconds
        for j, (h, t) in enumerate(pairs):
            if j == chosen:
                continue
            strictly_better = (h >= h_c and t < t_c) or (h > h_c and t <= t_c)
            assert not strictly_better


class TestTunePartition:
    def test_sizes_and_batch_math(self):
        y = np.array([0] * 100 + [1] * 25)
        part = make_tune_partition(y, Q=40, seed=0)
        assert part.labeled.size == 50    # 40 + 10
        assert part.unlabeled.size == 50
        assert part.evaluation.size == 25
        assert part.query_size == 12      # min(50 // 4, 40)
        assert part.iterations == 4       # ceil(50 / 12) - 1
        assert part.query_size * part.iterations <= part.unlabeled.size

    def test_disjoint_cover(self):
        y = np.array([0] * 60 + [1] * 40)
        part = make_tune_partition(y, Q=20, seed=1)
        allidx = np.concatenate([part.labeled, part.unlabeled, part.evaluation])
        assert np.array_equal(np.sort(allidx), np.arange(100))

    def test_inner_labeled_has_both_classes(self):
        y = np.array([0] * 90 + [1] * 10)
        for sim in range(4):
            part = make_tune_partition(y, Q=20, seed=3, sim=sim)
            assert np.unique(y[part.labeled]).size == 2

    def test_deterministic_per_sim(self):
        y = np.array([0] * 80 + [1] * 20)
        a = make_tune_partition(y, Q=20, seed=5, sim=0)
        b = make_tune_partition(y, Q=20, seed=5, sim=0)
        assert np.array_equal(a.labeled, b.labeled)
        c = make_tune_partition(y, Q=20, seed=5, sim=1)
        assert not np.array_equal(a.labeled, c.labeled)

    def test_batch_too_small(self):
        y = np.array([0] * 8 + [1] * 6)   # inner pool of 6, 6 // 4 < 2
        with pytest.raises(TuningInfeasibleError):
            make_tune_partition(y, Q=40, seed=0)

    def test_no_usable_split(self):
        y = np.array([0, 0, 1, 1])        # 20% slice is empty per class
        with pytest.raises(TuningInfeasibleError):
            make_tune_partition(y, Q=40, seed=0)


class TestTuneGbm:
    def test_search_marks_one_winner(self, separable):
        out = tune_gbm(separable.features, separable.labels,
                       grid=TINY_GBM_GRID, time_budget=60.0, max_combos=3,
                       k=3, seed=0)
        assert 1 <= len(out.results) <= 3
        assert sum(r.chosen for r in out.results) == 1
        assert out.results[out.chosen].chosen
        assert isinstance(out.params, GbmHyperParams)
        assert all(0.0 <= r.metric <= 1.0 for r in out.results)
        assert all(r.seconds > 0 for r in out.results)

    def test_visits_distinct_combos_deterministically(self, separable):
        a = tune_gbm(separable.features, separable.labels, grid=TINY_GBM_GRID,
                     time_budget=60.0, max_combos=4, k=3, seed=2)
        combos = [tuple(r.combo.items()) for r in a.results]
        assert len(set(combos)) == len(combos) == 4
        b = tune_gbm(separable.features, separable.labels, grid=TINY_GBM_GRID,
                     time_budget=60.0, max_combos=4, k=3, seed=2)
        assert combos == [tuple(r.combo.items()) for r in b.results]
        assert [r.metric for r in a.results] == [r.metric for r in b.results]

    def test_zero_budget_is_infeasible(self, separable):
        with pytest.raises(TuningInfeasibleError):
            tune_gbm(separable.features, separable.labels, grid=TINY_GBM_GRID,
                     time_budget=0.0, max_combos=2, k=3, seed=0)

    def test_report(self, separable, tmp_path):
        out = tune_gbm(separable.features, separable.labels, grid=TINY_GBM_GRID,
                       time_budget=60.0, max_combos=2, k=3, seed=1)
        p = tmp_path / "gbm_tuning.csv"
        write_gbm_report(out, p)
        with open(p, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(out.results)
        assert sum(int(r["chosen"]) for r in rows) == 1
        assert {"ntrees", "max_depth", "metric", "seconds"} <= set(rows[0])


@pytest.fixture(scope="module")
def tune_pool():
    return make_dataset(120, n_features=8, seed=31, name="inner-pool")


FAST_GBM = GbmHyperParams(ntrees=6, max_depth=2, min_rows=4, nbins=8)


class TestJasmineTune:
    def test_scores_every_combo(self, tune_pool):
        out = jasmine_tune(tune_pool, FAST_GBM, Q=40, grid=TINY_JAS_GRID,
                           inner_sims=2, seed=0, k=3)
        assert len(out.rows) == 2
        assert sum(r.chosen for r in out.rows) == 1
        assert out.rows[out.chosen].chosen
        assert isinstance(out.params, DynamicsParams)
        assert out.params.alpha_a0 == out.rows[out.chosen].combo["alpha_a0"]
        for row in out.rows:
            assert len(row.areas) == 2
            assert row.mean_area == pytest.approx(np.mean(row.areas))

    def test_deterministic(self, tune_pool):
        a = jasmine_tune(tune_pool, FAST_GBM, Q=40, grid=TINY_JAS_GRID,
                         inner_sims=2, seed=4, k=3)
        b = jasmine_tune(tune_pool, FAST_GBM, Q=40, grid=TINY_JAS_GRID,
                         inner_sims=2, seed=4, k=3)
        assert a.params == b.params
        assert [r.areas for r in a.rows] == [r.areas for r in b.rows]

    def test_tie_goes_to_earlier_combo(self, tune_pool, monkeypatch):
        # equal mean areas for every combo: index 0 must win
        monkeypatch.setattr("dynaq.tuning.curve_area", lambda curve, t_ref: 0.5)
        out = jasmine_tune(tune_pool, FAST_GBM, Q=40, grid=TINY_JAS_GRID,
                           inner_sims=2, seed=0, k=3)
        assert out.rows[0].mean_area == out.rows[1].mean_area
        assert out.chosen == 0

    def test_max_combos_subset(self, tune_pool):
        grid = {"alpha_a0": (0.25, 0.5), "beta": (1.0,), "gamma": (1.0,),
                "tau": (1.0 / 800, 1.0 / 200)}
        out = jasmine_tune(tune_pool, FAST_GBM, Q=40, grid=grid,
                           inner_sims=2, seed=0, k=3, max_combos=2)
        assert len(out.rows) == 2

    def test_report(self, tune_pool, tmp_path):
        out = jasmine_tune(tune_pool, FAST_GBM, Q=40, grid=TINY_JAS_GRID,
                           inner_sims=2, seed=0, k=3)
        p = tmp_path / "jasmine_tuning.csv"
        write_jasmine_report(out, p)
        with open(p, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        assert sum(int(r["chosen"]) for r in rows) == 1
        assert {"alpha_a0", "beta", "gamma", "tau", "area_s0", "area_s1",
                "mean_area"} <= set(rows[0])
