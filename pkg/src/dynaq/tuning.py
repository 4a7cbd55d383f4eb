"""Pre-run tuning: classifier hyperparameter random search with a
performance/time trade-off rule, and dynamics-parameter selection via inner
active-learning simulations on a partition of the initial labeled set.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from time import perf_counter
from typing import Optional, Sequence

import numpy as np

from .classifiers import GbmHyperParams, train_gbm
from .data import Dataset
from .dynamics import DynamicsParams
from .engine import METHODS, ActiveLoop, SimulatedOracle
from .errors import TuningInfeasibleError
from .rng import TUNING, derive_seed, stream
from .stats import LearningCurve, curve_area

# Search grid for the boosting knobs: three values per tuned dimension.
# Distribution (Bernoulli) and histogram mode are fixed, not searched.
GBM_GRID = {
    "ntrees": (250, 500, 1000),
    "max_depth": (6, 12, 24),
    "learn_rate": (0.02, 0.05, 0.125),
    "learn_rate_annealing": (0.95, 0.99, 0.999),
    "sample_rate": (0.60, 0.78, 1.0),
    "col_sample_rate": (0.84, 0.92, 1.0),
    "min_rows": (6, 8, 10),
    "nbins": (10, 16, 25),
    "nbins_cats": (16, 32, 64),
    "col_sample_rate_per_tree": (0.40, 0.64, 1.0),
    "col_sample_rate_change_per_level": (0.94, 1.0, 1.06),
}

_PARAM_FIELDS = ("ntrees", "max_depth", "learn_rate", "learn_rate_annealing",
                 "sample_rate", "col_sample_rate", "min_rows", "nbins")

# Dynamics grid: initial anomalous share, FN weight, update magnitude,
# random-decay speed.
JASMINE_GRID = {
    "alpha_a0": (0.25, 0.5, 0.75),
    "beta": (0.5, 1.0, 2.0),
    "gamma": (0.5, 1.0, 2.0),
    "tau": (1.0 / 800, 1.0 / 400, 1.0 / 200, 1.0 / 100),
}


def grid_size(grid: dict) -> int:
    return int(np.prod([len(v) for v in grid.values()]))


def decode_combo(grid: dict, index: int) -> dict:
    """Mixed-radix decode of a linear grid index into a combo mapping."""
    total = grid_size(grid)
    if not 0 <= index < total:
        raise ValueError(f"combo index {index} out of range [0, {total})")
    combo = {}
    for name, values in grid.items():
        combo[name] = values[index % len(values)]
        index //= len(values)
    return combo


def combo_to_params(combo: dict) -> GbmHyperParams:
    extra = {k: v for k, v in combo.items() if k not in _PARAM_FIELDS}
    fields = {k: combo[k] for k in _PARAM_FIELDS if k in combo}
    return GbmHyperParams(**fields, extra=extra)


@dataclass
class TuneResult:
    """One evaluated combo: metric h_j, wall seconds t_j, trade-off d_j."""

    combo: dict
    metric: float
    seconds: float
    d_value: Optional[float] = None
    chosen: bool = False

    def __post_init__(self):
        if self.seconds < 0:
            raise ValueError("seconds must be nonnegative")
        if not 0.0 <= self.metric <= 1.0:
            raise ValueError("metric must lie in [0, 1]")


def select_best(results: Sequence[TuneResult], epsilon: float) -> int:
    """Pick the winner among evaluated combos.

    The metric leader wins by default (ties broken toward smaller time, then
    input order).  A strictly faster combo j replaces it when the metric
    sacrifice per second saved, d_j = (h* - h_j)/(t* - t_j), stays below
    epsilon; among such combos the smallest d_j wins.  d values are recorded
    onto the faster results as a side effect.
    """
    if not results:
        raise TuningInfeasibleError("no combos were evaluated")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    order = sorted(range(len(results)),
                   key=lambda j: (-results[j].metric, results[j].seconds, j))
    best = order[0]
    h_star, t_star = results[best].metric, results[best].seconds
    qualifying = []
    for j, res in enumerate(results):
        if res.seconds < t_star:
            res.d_value = (h_star - res.metric) / (t_star - res.seconds)
            if res.d_value < epsilon:
                qualifying.append(j)
    if qualifying:
        best = min(qualifying,
                   key=lambda j: (results[j].d_value, results[j].seconds, j))
    results[best].chosen = True
    return best


@dataclass
class GbmTuningOutcome:
    params: GbmHyperParams
    results: list
    chosen: int


def tune_gbm(X: np.ndarray, y: np.ndarray, grid: dict = GBM_GRID,
             time_budget: float = 600.0, max_combos: Optional[int] = 60,
             epsilon: float = 1e-4, k: int = 5, seed: int = 0) -> GbmTuningOutcome:
    """Random search over the grid under a wall-clock budget.

    Combos are visited in a seeded random order without replacement; each is
    scored by the cross-validated F1 of its calibrated classifier.  The
    budget is checked between combos, so at least one combo runs whenever
    the budget is positive.
    """
    total = grid_size(grid)
    order = stream(seed, TUNING, 0).permutation(total)
    if max_combos is not None:
        order = order[:max_combos]
    results: list[TuneResult] = []
    started = perf_counter()
    for lin in order:
        if perf_counter() - started >= time_budget:
            break
        combo = decode_combo(grid, int(lin))
        params = combo_to_params(combo)
        t0 = perf_counter()
        model = train_gbm(X, y, params, k=k,
                          seed=derive_seed(seed, TUNING, 1, int(lin)))
        results.append(TuneResult(combo=combo, metric=model.oof_f1,
                                  seconds=perf_counter() - t0))
    if not results:
        raise TuningInfeasibleError(
            "time budget expired before any combo finished")
    chosen = select_best(results, epsilon)
    return GbmTuningOutcome(params=combo_to_params(results[chosen].combo),
                            results=results, chosen=chosen)


def write_gbm_report(outcome: GbmTuningOutcome, path) -> None:
    names = list(outcome.results[0].combo)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["metric", "seconds", "d_value", "chosen"])
        for res in outcome.results:
            d = "" if res.d_value is None else repr(res.d_value)
            w.writerow([res.combo[n] for n in names]
                       + [repr(res.metric), repr(res.seconds), d, int(res.chosen)])


# -- dynamics-parameter tuning ---------------------------------------------


@dataclass
class TunePartition:
    """Inner split of the initial labeled pool (indices into that pool)."""

    labeled: np.ndarray
    unlabeled: np.ndarray
    evaluation: np.ndarray
    query_size: int
    iterations: int


def _stratified_three_way(y: np.ndarray, rng: np.random.Generator):
    lab, unl, ev = [], [], []
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        m = idx.size
        cut1 = int(round(0.4 * m))
        cut2 = int(round(0.8 * m))
        lab.append(idx[:cut1])
        unl.append(idx[cut1:cut2])
        ev.append(idx[cut2:])
    return (np.sort(np.concatenate(lab)), np.sort(np.concatenate(unl)),
            np.sort(np.concatenate(ev)))


def make_tune_partition(y: np.ndarray, Q: int, seed: int, sim: int = 0,
                        attempts: int = 20) -> TunePartition:
    """Split the initial pool 40/40/20 (stratified), retrying the draw until
    the inner labeled part holds both classes."""
    y = np.asarray(y)
    for attempt in range(attempts):
        rng = stream(seed, TUNING, 2, sim, attempt)
        lab, unl, ev = _stratified_three_way(y, rng)
        if np.unique(y[lab]).size < 2 or unl.size == 0 or ev.size == 0:
            continue
        q_j = min(unl.size // 4, Q)
        if q_j < 2:
            raise TuningInfeasibleError(
                f"inner pool of {unl.size} rows cannot support a query batch")
        t_j = math.ceil(unl.size / q_j) - 1
        return TunePartition(lab, unl, ev, q_j, t_j)
    raise TuningInfeasibleError(
        f"no two-class inner labeled set found in {attempts} attempts")


@dataclass
class JasmineTuneRow:
    combo: dict
    areas: list
    mean_area: float
    chosen: bool = False


@dataclass
class JasmineTuningOutcome:
    params: DynamicsParams
    rows: list
    chosen: int


def jasmine_tune(pool: Dataset, gbm_params: GbmHyperParams, Q: int,
                 grid: dict = JASMINE_GRID, inner_sims: int = 4,
                 seed: int = 0, k: int = 5,
                 max_combos: Optional[int] = None) -> JasmineTuningOutcome:
    """Choose dynamics parameters by inner simulations on the initial pool.

    ``pool`` must contain exactly the initially labeled rows; everything the
    inner loops see lives inside it, so the outer run gains no data
    advantage.  Every combo is scored by the mean trapezoidal area of its
    inner learning curves; the best mean wins, ties going to the earlier
    combo in grid order.
    """
    total = grid_size(grid)
    combo_ids = np.arange(total)
    if max_combos is not None and max_combos < total:
        chosen_subset = stream(seed, TUNING, 4).permutation(total)[:max_combos]
        combo_ids = np.sort(chosen_subset)

    partitions = [make_tune_partition(pool.labels, Q, seed, sim=s)
                  for s in range(inner_sims)]

    rows: list[JasmineTuneRow] = []
    for lin in combo_ids:
        combo = decode_combo(grid, int(lin))
        params = DynamicsParams(**combo)
        areas = []
        for s, part in enumerate(partitions):
            loop = ActiveLoop(
                pool, part.labeled, part.unlabeled, part.evaluation,
                METHODS["jas.main"], gbm_params, params, part.query_size,
                master_seed=derive_seed(seed, TUNING, 3, int(lin)), sim=s,
                k_folds=k)
            oracle = SimulatedOracle(pool.labels)
            history = loop.run(oracle, part.iterations, closing_eval=False)
            metric = [r.f1_eval for r in history]
            curve = LearningCurve(
                t=np.arange(len(metric)),
                labeled=part.labeled.size
                + part.query_size * np.arange(len(metric)),
                metric=np.asarray(metric, dtype=np.float64),
                method="jas.main", sim=s)
            areas.append(curve_area(curve, len(metric) - 1))
        rows.append(JasmineTuneRow(combo=combo, areas=areas,
                                   mean_area=float(np.mean(areas))))
    best = max(range(len(rows)), key=lambda i: (rows[i].mean_area, -i))
    rows[best].chosen = True
    return JasmineTuningOutcome(params=DynamicsParams(**rows[best].combo),
                                rows=rows, chosen=best)


def write_jasmine_report(outcome: JasmineTuningOutcome, path) -> None:
    names = list(outcome.rows[0].combo)
    n_sims = len(outcome.rows[0].areas)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(names + [f"area_s{i}" for i in range(n_sims)]
                   + ["mean_area", "chosen"])
        for row in outcome.rows:
            w.writerow([row.combo[n] for n in names]
                       + [repr(a) for a in row.areas]
                       + [repr(row.mean_area), int(row.chosen)])
