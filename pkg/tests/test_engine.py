"""Tests for the active-learning loop, the method registry, and the
simulated oracle."""
import numpy as np
import pytest

from dynaq.classifiers import GbmHyperParams
from dynaq.data import partition
from dynaq.dynamics import DynamicsParams
from dynaq.engine import METHOD_ORDER, METHODS, ActiveLoop, SimulatedOracle
from dynaq.errors import DynaqError, SchemaError

FAST_GBM = GbmHyperParams(ntrees=8, max_depth=3, min_rows=4, nbins=8)


def make_loop(data, method="jas.main", Q=20, labeled0=30, eval_size=50,
              seed=0, sim=0):
    part = partition(data, labeled0, eval_size=eval_size, seed=seed)
    loop = ActiveLoop(data, part.labeled, part.unlabeled, part.evaluation,
                      METHODS[method], FAST_GBM, DynamicsParams(),
                      Q=Q, master_seed=seed, sim=sim, k_folds=4,
                      anomaly_trees=25, anomaly_subsample=64)
    return loop, part


class TestMethodRegistry:
    def test_ids_are_stable(self):
        ids = {m: spec.method_id for m, spec in METHODS.items()}
        assert ids == {"jas.main": 0, "jas.basic": 1, "jas.anom": 2,
                       "jas.uncert": 3, "jas.rand": 4, "ala.main-lite": 5}

    def test_order_follows_ids(self):
        assert METHOD_ORDER == ("jas.main", "jas.basic", "jas.anom",
                                "jas.uncert", "jas.rand", "ala.main-lite")

    def test_specs(self):
        assert METHODS["jas.main"].dynamic
        assert METHODS["jas.main"].classifier == "gbm"
        assert METHODS["jas.main"].anomaly == "iforest"
        assert not METHODS["jas.rand"].dynamic
        assert METHODS["jas.rand"].static_kind == "rand_only"
        assert METHODS["ala.main-lite"].classifier == "logreg"
        assert METHODS["ala.main-lite"].anomaly == "gaussian"
        assert METHODS["ala.main-lite"].static_kind == "basic_5050"


class TestSimulatedOracle:
    def test_labels_and_audit(self):
        oracle = SimulatedOracle(np.array([0, 1, 1, 0, 1]))
        got = oracle.label(np.array([1, 3]))
        assert got.tolist() == [1, 0]
        assert oracle.total_charged == 2
        assert oracle.double_charged == []

    def test_double_charge_recorded(self):
        oracle = SimulatedOracle(np.array([0, 1, 1]))
        oracle.label(np.array([0, 2]))
        oracle.label(np.array([2, 1]))
        assert oracle.double_charged == [2]
        assert oracle.total_charged == 4

    def test_unknown_index(self):
        oracle = SimulatedOracle(np.array([0, 1]))
        with pytest.raises(SchemaError):
            oracle.label(np.array([5]))


class TestLoopInvariants:
    def test_set_moves(self, tiny_dataset):
        loop, part = make_loop(tiny_dataset)
        oracle = SimulatedOracle(tiny_dataset.labels)
        loop.run(oracle, iterations=3)

        assert loop.labeled.size == 30 + 3 * 20
        assert loop.unlabeled.size == part.unlabeled.size - 3 * 20
        # disjoint, and together still the original non-eval rows
        assert not np.intersect1d(loop.labeled, loop.unlabeled).size
        combined = np.union1d(loop.labeled, loop.unlabeled)
        original = np.union1d(part.labeled, part.unlabeled)
        assert np.array_equal(combined, original)

    def test_eval_rows_never_charged(self, tiny_dataset):
        loop, part = make_loop(tiny_dataset)
        oracle = SimulatedOracle(tiny_dataset.labels)
        loop.run(oracle, iterations=3)
        assert oracle.charges[part.evaluation].sum() == 0
        assert oracle.charges[part.labeled].sum() == 0  # arrived labeled
        assert oracle.total_charged == 3 * 20
        assert oracle.double_charged == []

    def test_labeled_growth_in_reports(self, tiny_dataset):
        loop, _ = make_loop(tiny_dataset)
        oracle = SimulatedOracle(tiny_dataset.labels)
        hist = loop.run(oracle, iterations=3)
        assert [r.labeled_size for r in hist] == [30, 50, 70, 90]
        assert [r.t for r in hist] == [0, 1, 2, 3]
        for r in hist[:-1]:
            assert r.batch_size == 20
        assert hist[-1].batch_size is None  # closing evaluation row

    def test_learned_labels_match_ground_truth(self, tiny_dataset):
        loop, _ = make_loop(tiny_dataset)
        loop.run(SimulatedOracle(tiny_dataset.labels), iterations=2)
        got = loop.y_known[loop.labeled]
        assert np.array_equal(got, tiny_dataset.labels[loop.labeled])

    def test_determinism(self, tiny_dataset):
        h1 = make_loop(tiny_dataset, seed=5)[0].run(
            SimulatedOracle(tiny_dataset.labels), iterations=3)
        h2 = make_loop(tiny_dataset, seed=5)[0].run(
            SimulatedOracle(tiny_dataset.labels), iterations=3)
        assert h1 == h2
        h3 = make_loop(tiny_dataset, seed=6)[0].run(
            SimulatedOracle(tiny_dataset.labels), iterations=3)
        assert h1 != h3

    def test_pool_exhaustion_stops_cleanly(self, tiny_dataset):
        # 120 unlabeled rows, Q=50: two batches fit, the third does not
        loop, _ = make_loop(tiny_dataset, Q=50)
        hist = loop.run(SimulatedOracle(tiny_dataset.labels), iterations=10)
        assert len(hist) == 3  # two query rows plus the closing row
        assert loop.unlabeled.size == 20
        assert hist[-1].batch_size is None

    def test_query_size_floor(self, tiny_dataset):
        with pytest.raises(SchemaError):
            make_loop(tiny_dataset, Q=1)


class TestFractionBehavior:
    def test_static_methods_hold_fractions(self, tiny_dataset):
        for method, triple in (("jas.basic", (0.5, 0.5, 0.0)),
                               ("jas.anom", (1.0, 0.0, 0.0)),
                               ("jas.uncert", (0.0, 1.0, 0.0)),
                               ("jas.rand", (0.0, 0.0, 1.0)),
                               ("ala.main-lite", (0.5, 0.5, 0.0))):
            loop, _ = make_loop(tiny_dataset, method=method)
            hist = loop.run(SimulatedOracle(tiny_dataset.labels), iterations=2)
            for r in hist:
                assert (r.alpha_anomalous, r.alpha_uncertain,
                        r.alpha_random) == triple
                assert r.delta_a is None and r.factor is None

    def test_dynamic_fractions_move_and_stay_bounded(self, tiny_dataset):
        loop, _ = make_loop(tiny_dataset, method="jas.main")
        hist = loop.run(SimulatedOracle(tiny_dataset.labels), iterations=4)
        trail = [(r.alpha_anomalous, r.alpha_uncertain, r.alpha_random)
                 for r in hist]
        assert len(set(trail)) > 1
        for r in hist[:-1]:
            assert r.delta_a is not None and r.delta_z is not None
            assert r.factor is not None
            total = r.alpha_anomalous + r.alpha_uncertain + r.alpha_random
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_random_method_composition(self, tiny_dataset):
        loop, _ = make_loop(tiny_dataset, method="jas.rand")
        hist = loop.run(SimulatedOracle(tiny_dataset.labels), iterations=2)
        for r in hist[:-1]:
            assert r.n_random == 20
            assert r.n_anomalous == 0 and r.n_uncertain == 0 and r.n_dual == 0

    def test_batch_composition_accounting(self, tiny_dataset):
        loop, _ = make_loop(tiny_dataset, method="jas.main")
        hist = loop.run(SimulatedOracle(tiny_dataset.labels), iterations=3)
        for r in hist[:-1]:
            assert r.n_anomalous + r.n_uncertain - r.n_dual + r.n_random \
                == r.batch_size == 20


class TestClassifierSelection:
    def test_gbm_methods(self, tiny_dataset):
        loop, _ = make_loop(tiny_dataset, method="jas.main")
        loop.train_and_evaluate()
        assert loop.classifier.kind == "gbm"

    def test_logreg_method(self, tiny_dataset):
        loop, _ = make_loop(tiny_dataset, method="ala.main-lite")
        loop.train_and_evaluate()
        assert loop.classifier.kind == "logreg"
        hist = loop.run(SimulatedOracle(tiny_dataset.labels), iterations=2)
        assert all(r.f1_eval is not None for r in hist)


class TestDegeneratePool:
    def _single_class_loop(self, data, method="jas.main"):
        benign = np.flatnonzero(data.labels == 0)
        labeled = benign[:20]
        eval_idx = np.arange(150, 200)
        rest = np.setdiff1d(np.arange(150), labeled)
        return ActiveLoop(data, labeled, rest, eval_idx, METHODS[method],
                          FAST_GBM, DynamicsParams(), Q=20, master_seed=1,
                          k_folds=4, anomaly_trees=25, anomaly_subsample=64)

    def test_constant_classifier_and_random_batch(self, tiny_dataset):
        loop = self._single_class_loop(tiny_dataset)
        loop.train_and_evaluate()
        assert loop.classifier.kind == "constant"
        batch = loop.build_batch()
        assert batch.counts.rand == 20
        assert not batch.anomalous.any() and not batch.uncertain.any()

    def test_fractions_rescale_without_update(self, tiny_dataset):
        loop = self._single_class_loop(tiny_dataset)
        loop.train_and_evaluate()
        loop.build_batch()
        before = loop.fractions
        report = loop.complete_iteration(
            tiny_dataset.labels[loop.pending_batch.indices]
            if loop.pending_batch else None)
        assert report.degenerate
        assert report.factor == 0.0
        assert report.delta_a is None
        # interval endpoints moved but relative position is a pure rescale
        assert loop.fractions.t == before.t + 1

    def test_recovers_once_both_classes_arrive(self, tiny_dataset):
        loop = self._single_class_loop(tiny_dataset)
        hist = loop.run(SimulatedOracle(tiny_dataset.labels), iterations=3)
        flags = [r.degenerate for r in hist]
        assert flags[0]
        assert not flags[-1]  # random batches pull in positives quickly


class TestIterationProtocol:
    def test_build_before_train_rejected(self, tiny_dataset):
        loop, _ = make_loop(tiny_dataset)
        with pytest.raises(DynaqError):
            loop.build_batch()

    def test_complete_without_batch_rejected(self, tiny_dataset):
        loop, _ = make_loop(tiny_dataset)
        loop.train_and_evaluate()
        with pytest.raises(DynaqError):
            loop.complete_iteration(np.zeros(20, dtype=np.int8))

    def test_label_shape_checked(self, tiny_dataset):
        loop, _ = make_loop(tiny_dataset)
        loop.train_and_evaluate()
        loop.build_batch()
        with pytest.raises(SchemaError):
            loop.complete_iteration(np.zeros(7, dtype=np.int8))

    def test_label_values_checked(self, tiny_dataset):
        loop, _ = make_loop(tiny_dataset)
        loop.train_and_evaluate()
        loop.build_batch()
        with pytest.raises(SchemaError):
            loop.complete_iteration(np.full(20, 2, dtype=np.int8))

    def test_pending_batch_cleared(self, tiny_dataset):
        loop, _ = make_loop(tiny_dataset)
        loop.train_and_evaluate()
        batch = loop.build_batch()
        loop.complete_iteration(tiny_dataset.labels[batch.indices])
        assert loop.pending_batch is None

    def test_on_report_callback(self, tiny_dataset):
        loop, _ = make_loop(tiny_dataset)
        seen = []
        hist = loop.run(SimulatedOracle(tiny_dataset.labels), iterations=2,
                        on_report=seen.append)
        assert seen == hist

    def test_no_eval_set_gives_none_f1(self, tiny_dataset):
        part = partition(tiny_dataset, 30, eval_size=0, seed=0)
        loop = ActiveLoop(tiny_dataset, part.labeled, part.unlabeled,
                          part.evaluation, METHODS["jas.rand"], FAST_GBM,
                          DynamicsParams(), Q=20, master_seed=0, k_folds=4)
        hist = loop.run(SimulatedOracle(tiny_dataset.labels), iterations=1)
        assert all(r.f1_eval is None for r in hist)
