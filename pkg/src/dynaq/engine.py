"""The active-learning loop: method registry, simulated oracle, and the
iteration engine shared by the experiment harness, the tuning phase, and the
labeling service.

One iteration t: train the classifier on L(t), measure F1 on the evaluation
set, score the unlabeled pool, assemble the query batch from the current
fractions, obtain labels, compute the information metrics and the fraction
update, and move the batch from U to L.  The loop exposes the halves of that
cycle separately (begin / complete) so a human oracle can sit in the middle.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .anomaly import fit_class_scorers, score_by_class, split_by_class
from .classifiers import constant_classifier, train_gbm, train_logreg
from .data import Dataset
from .dynamics import (DynamicsParams, FractionBounds, QueryFractions,
                       info_metric, initial_fractions, rescale_only,
                       update_factor, update_fractions)
from .errors import DynaqError, PoolExhaustedError, SchemaError
from .queries import QueryBatch, build_query_batch, certainty_score, static_query
from .rng import ANOMALY, BATCH, CLASSIFIER, derive_seed, stream
from .stats import f1


@dataclass(frozen=True)
class MethodSpec:
    """One active-learning method: classifier, anomaly model, query policy."""

    name: str
    method_id: int              # stable, used in RNG stream keys
    classifier: str             # "gbm" or "logreg"
    anomaly: Optional[str]      # "iforest", "gaussian", or None
    dynamic: bool               # fractions updated from the information metrics
    static_kind: Optional[str]  # query kind when not dynamic


METHODS = {
    "jas.main": MethodSpec("jas.main", 0, "gbm", "iforest", True, None),
    "jas.basic": MethodSpec("jas.basic", 1, "gbm", "iforest", False, "basic_5050"),
    "jas.anom": MethodSpec("jas.anom", 2, "gbm", "iforest", False, "anom_only"),
    "jas.uncert": MethodSpec("jas.uncert", 3, "gbm", None, False, "uncert_only"),
    "jas.rand": MethodSpec("jas.rand", 4, "gbm", None, False, "rand_only"),
    "ala.main-lite": MethodSpec("ala.main-lite", 5, "logreg", "gaussian", False,
                                "basic_5050"),
}

METHOD_ORDER = tuple(sorted(METHODS, key=lambda m: METHODS[m].method_id))

_STATIC_TRIPLES = {
    "basic_5050": (0.5, 0.5, 0.0),
    "anom_only": (1.0, 0.0, 0.0),
    "uncert_only": (0.0, 1.0, 0.0),
    "rand_only": (0.0, 0.0, 1.0),
}


class SimulatedOracle:
    """Ground-truth label server with a charge audit.

    Every index is chargeable once per run; repeat charges still answer but
    land in the audit list.
    """

    def __init__(self, labels: np.ndarray):
        self._labels = np.asarray(labels, dtype=np.int8)
        self.charges = np.zeros(self._labels.size, dtype=np.int32)
        self.double_charged: list[int] = []

    def label(self, indices: np.ndarray) -> np.ndarray:
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size and (indices.min() < 0 or indices.max() >= self._labels.size):
            raise SchemaError("oracle asked for an unknown index")
        repeat = indices[self.charges[indices] > 0]
        if repeat.size:
            self.double_charged.extend(int(i) for i in repeat)
        self.charges[indices] += 1
        return self._labels[indices].copy()

    @property
    def total_charged(self) -> int:
        return int(self.charges.sum())


@dataclass
class IterationReport:
    """One row of the run record.

    Rows for query iterations carry the batch composition; the closing
    evaluation row carries only the metric and the (unused) fractions.
    Static methods leave the delta fields unset.
    """

    t: int
    labeled_size: int
    f1_eval: Optional[float]
    alpha_anomalous: float
    alpha_uncertain: float
    alpha_random: float
    delta_a: Optional[float] = None
    delta_z: Optional[float] = None
    factor: Optional[float] = None
    n_anomalous: Optional[int] = None
    n_uncertain: Optional[int] = None
    n_dual: Optional[int] = None
    n_random: Optional[int] = None
    batch_size: Optional[int] = None
    degenerate: bool = False


class ActiveLoop:
    """State machine for one (simulation, method) run.

    The caller owns iteration count and the oracle; the loop owns pools,
    fractions, and models.  Initial labels are taken from the dataset (the
    starting set arrives labeled); every later label must come through
    complete_iteration.
    """

    def __init__(self, data: Dataset, labeled: np.ndarray, unlabeled: np.ndarray,
                 eval_idx: np.ndarray, method: MethodSpec,
                 gbm_params, dynamics: DynamicsParams, Q: int,
                 master_seed: int, sim: int = 0, k_folds: int = 5,
                 anomaly_trees: int = 100, anomaly_subsample: int = 256):
        if Q < 2:
            raise SchemaError(f"query size must be at least 2, got {Q}")
        self.data = data
        self.labeled = np.sort(np.asarray(labeled, dtype=np.int64))
        self.unlabeled = np.sort(np.asarray(unlabeled, dtype=np.int64))
        self.eval_idx = np.asarray(eval_idx, dtype=np.int64)
        self.method = method
        self.gbm_params = gbm_params
        self.dynamics = dynamics
        self.Q = int(Q)
        self.master_seed = int(master_seed)
        self.sim = int(sim)
        self.k_folds = int(k_folds)
        self.anomaly_trees = int(anomaly_trees)
        self.anomaly_subsample = int(anomaly_subsample)

        self.t = 0
        self.y_known = np.full(data.n_rows, -1, dtype=np.int8)
        self.y_known[self.labeled] = data.labels[self.labeled]
        if method.dynamic:
            self.bounds = FractionBounds(Q, dynamics.tau, self.labeled.size)
            self.fractions = initial_fractions(dynamics, self.bounds)
        else:
            a, z, r = _STATIC_TRIPLES[method.static_kind]
            self.bounds = None
            self.fractions = QueryFractions(a, z, r, t=0)
        self.history: list[IterationReport] = []
        self.classifier = None
        self._last_f1: Optional[float] = None
        self._single_class = False
        self._pending: Optional[QueryBatch] = None

    # -- seeding ----------------------------------------------------------

    def _seed(self, purpose: int) -> int:
        return derive_seed(self.master_seed, purpose, self.sim,
                           self.method.method_id, self.t)

    def _rng(self, purpose: int) -> np.random.Generator:
        return stream(self.master_seed, purpose, self.sim,
                      self.method.method_id, self.t)

    # -- iteration halves --------------------------------------------------

    def train_and_evaluate(self) -> Optional[float]:
        """Fit the classifier on L(t) and score the evaluation set."""
        X = self.data.features
        y_l = self.y_known[self.labeled]
        if (y_l < 0).any():
            raise DynaqError("labeled row without a stored label")
        self._single_class = np.unique(y_l).size < 2
        if self._single_class:
            self.classifier = constant_classifier(float(y_l.mean()), X.shape[1])
        elif self.method.classifier == "gbm":
            k = min(self.k_folds, self.labeled.size)
            self.classifier = train_gbm(X[self.labeled], y_l, self.gbm_params,
                                        k=k, seed=self._seed(CLASSIFIER))
        else:
            self.classifier = train_logreg(X[self.labeled], y_l,
                                           seed=self._seed(CLASSIFIER))
        self._last_f1 = None
        if self.eval_idx.size:
            _, preds = self.classifier.predict(X[self.eval_idx])
            self._last_f1 = f1(preds, self.data.labels[self.eval_idx])
        return self._last_f1

    def build_batch(self) -> QueryBatch:
        """Assemble Q(t) from the current model state."""
        if self.classifier is None:
            raise DynaqError("train_and_evaluate must run before build_batch")
        if self.unlabeled.size < self.Q:
            raise PoolExhaustedError(
                f"unlabeled pool has {self.unlabeled.size} rows, batch needs {self.Q}")
        X_u = self.data.features[self.unlabeled]
        y_hat, c_hat = self.classifier.predict(X_u)
        rng_b = self._rng(BATCH)

        if self._single_class or self.method.static_kind == "rand_only":
            batch = static_query("rand_only", self.unlabeled, self.Q, rng_b,
                                 y_hat=y_hat, c_hat=c_hat)
        else:
            cert = certainty_score(y_hat)
            if self.method.anomaly is not None:
                pools = split_by_class(self.labeled, self.y_known[self.labeled],
                                       self.unlabeled, c_hat)
                scorers = fit_class_scorers(
                    self.data.features, pools, kind=self.method.anomaly,
                    n_trees=self.anomaly_trees,
                    subsample=self.anomaly_subsample,
                    seed=self._seed(ANOMALY))
                anom = score_by_class(X_u, c_hat, scorers)
            else:
                anom = np.zeros(self.unlabeled.size)
            if self.method.dynamic:
                batch = build_query_batch(self.unlabeled, y_hat, c_hat, anom,
                                          cert, self.fractions, self.Q, rng_b,
                                          enforce_min_az=True)
            else:
                batch = static_query(self.method.static_kind, self.unlabeled,
                                     self.Q, rng_b, y_hat=y_hat, c_hat=c_hat,
                                     anom_scores=anom, cert_scores=cert,
                                     t=self.t)
        self._pending = batch
        return batch

    @property
    def pending_batch(self) -> Optional[QueryBatch]:
        return self._pending

    @property
    def current_f1(self) -> Optional[float]:
        """Evaluation score of the most recently trained model."""
        return self._last_f1

    def complete_iteration(self, labels: np.ndarray) -> IterationReport:
        """Consume oracle labels for the pending batch and advance to t+1."""
        batch = self._pending
        if batch is None:
            raise DynaqError("no pending batch to complete")
        labels = np.asarray(labels, dtype=np.int8)
        if labels.shape != (len(batch),):
            raise SchemaError(
                f"expected {len(batch)} labels, got {labels.shape}")
        if ((labels != 0) & (labels != 1)).any():
            raise SchemaError("labels must be 0 or 1")

        delta_a = delta_z = factor = None
        if self.method.dynamic:
            if self._single_class:
                factor = 0.0
                next_fr = rescale_only(self.fractions, self.bounds)
            else:
                delta_a = info_metric(batch.y_hat[batch.anomalous],
                                      batch.c_hat[batch.anomalous],
                                      labels[batch.anomalous],
                                      self.dynamics.beta)
                delta_z = info_metric(batch.y_hat[batch.uncertain],
                                      batch.c_hat[batch.uncertain],
                                      labels[batch.uncertain],
                                      self.dynamics.beta)
                factor = update_factor(delta_a, delta_z, self.dynamics.gamma)
                next_fr = update_fractions(self.fractions, factor, self.bounds)
        else:
            next_fr = dataclasses.replace(self.fractions, t=self.t + 1)

        dual = int((batch.anomalous & batch.uncertain).sum())
        report = IterationReport(
            t=self.t, labeled_size=self.labeled.size, f1_eval=self._last_f1,
            alpha_anomalous=self.fractions.anomalous,
            alpha_uncertain=self.fractions.uncertain,
            alpha_random=self.fractions.random,
            delta_a=delta_a, delta_z=delta_z, factor=factor,
            n_anomalous=batch.q_anom, n_uncertain=batch.q_unc, n_dual=dual,
            n_random=batch.q_rand, batch_size=len(batch),
            degenerate=self._single_class)

        self.y_known[batch.indices] = labels
        self.labeled = np.sort(np.concatenate([self.labeled, batch.indices]))
        self.unlabeled = np.setdiff1d(self.unlabeled, batch.indices,
                                      assume_unique=True)
        self.fractions = next_fr
        self.t += 1
        self._pending = None
        self.classifier = None
        self._last_f1 = None
        self.history.append(report)
        return report

    def final_evaluation(self) -> IterationReport:
        """Closing train-and-score row after the last batch was absorbed."""
        f1_eval = self.train_and_evaluate()
        report = IterationReport(
            t=self.t, labeled_size=self.labeled.size, f1_eval=f1_eval,
            alpha_anomalous=self.fractions.anomalous,
            alpha_uncertain=self.fractions.uncertain,
            alpha_random=self.fractions.random,
            degenerate=self._single_class)
        self.history.append(report)
        return report

    # -- whole runs ---------------------------------------------------------

    def run(self, oracle: SimulatedOracle, iterations: int,
            closing_eval: bool = True,
            on_report: Optional[Callable[[IterationReport], None]] = None
            ) -> list[IterationReport]:
        """Drive the loop for a fixed number of query iterations.

        Stops early (cleanly, keeping the partial record) if the pool cannot
        fill another batch.  With closing_eval the final labeled set gets one
        more train-and-score row.
        """
        for _ in range(iterations):
            if self.unlabeled.size < self.Q:
                break
            self.train_and_evaluate()
            batch = self.build_batch()
            labels = oracle.label(batch.indices)
            report = self.complete_iteration(labels)
            if on_report is not None:
                on_report(report)
        if closing_eval:
            report = self.final_evaluation()
            if on_report is not None:
                on_report(report)
        return self.history
