"""End-to-end experiment runner: resolve the dataset and parameters, run all
(simulation, method) pairs on shared partitions, stream records to disk, and
emit the statistics tables."""

from __future__ import annotations

import platform
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import yaml

from .config import (TUNE, ExperimentConfig, config_to_mapping,
                     resolve_dataset)
from .data import partition
from .engine import METHODS, ActiveLoop, SimulatedOracle
from .errors import UndefinedTestError
from .records import RunWriter, write_areas, write_wilcoxon
from .rng import PARTITION, derive_seed
from .stats import (SIGNIFICANCE, LearningCurve, curve_area, default_t_refs,
                    wilcoxon_one_sided)
from .tuning import (jasmine_tune, tune_gbm, write_gbm_report,
                     write_jasmine_report)

# Commonly tabulated starting-pool size for the merged-corpus variant at a
# 125-row start; the run derives its own value and records any mismatch.
_TABULATED_U0 = {("nslkdd-rand", 125): 146392, ("nslkdd-rand", 250): 146267}


@dataclass
class RunOutputs:
    out_dir: Path
    curves: dict                      # (sim, method) -> LearningCurve
    gbm_params: object
    dynamics_params: object
    meta: dict


def compute_statistics(curves: dict, methods, sims: int, t_refs,
                       labeled0: int, query_size: int):
    """Areas per (sim, method, t_ref) plus pairwise one-sided tests."""
    area_rows = []
    areas = {}
    for t_ref in t_refs:
        for method in methods:
            vals = []
            for sim in range(sims):
                curve = curves.get((sim, method))
                if curve is None or t_ref > curve.t[-1]:
                    vals.append(None)
                    continue
                a = curve_area(curve, t_ref)
                area_rows.append((sim, method, t_ref,
                                  labeled0 + query_size * t_ref, a))
                vals.append(a)
            areas[(method, t_ref)] = vals

    wilcox_rows = []
    for t_ref in t_refs:
        labeled = labeled0 + query_size * t_ref
        for a_name in methods:
            for b_name in methods:
                if a_name == b_name:
                    continue
                pairs = [(x, y) for x, y in zip(areas[(a_name, t_ref)],
                                                areas[(b_name, t_ref)])
                         if x is not None and y is not None]
                if not pairs:
                    continue
                av = np.array([p[0] for p in pairs])
                bv = np.array([p[1] for p in pairs])
                n = int(np.count_nonzero(av - bv))
                try:
                    p = wilcoxon_one_sided(av, bv)
                    sig = p < SIGNIFICANCE
                except UndefinedTestError:
                    p, sig = None, None
                wilcox_rows.append((t_ref, labeled, a_name, b_name, n, p, sig))
    return area_rows, wilcox_rows


def _resolve_parameters(config: ExperimentConfig, data, fixed_eval,
                        out_dir: Path, log: Callable[[str], None]):
    """Replace tuning directives with tuned values, using the first
    simulation's starting pool."""
    gbm, dyn = config.gbm, config.dynamics
    sources = {"gbm": "configured", "dynamics": "configured"}
    if gbm == TUNE or dyn == TUNE:
        part0 = partition(data, config.labeled0,
                          0 if fixed_eval is not None else config.eval_size,
                          fixed_eval, seed=derive_seed(config.seed, PARTITION, 0))
        pool = data.take(part0.labeled, name="tuning-pool")
        if gbm == TUNE:
            log("tuning classifier hyperparameters on the starting pool")
            outcome = tune_gbm(pool.features, pool.labels,
                               time_budget=config.gbm_time_budget,
                               max_combos=config.gbm_max_combos,
                               k=min(config.k_folds, pool.n_rows),
                               seed=config.seed)
            write_gbm_report(outcome, out_dir / "tuning_gbm.csv")
            gbm = outcome.params
            sources["gbm"] = f"tuned over {len(outcome.results)} combos"
        if dyn == TUNE:
            log("tuning dynamics parameters via inner simulations")
            outcome = jasmine_tune(pool, gbm, config.query_size,
                                   inner_sims=config.jasmine_inner_sims,
                                   seed=config.seed,
                                   k=min(config.k_folds, 5),
                                   max_combos=config.jasmine_max_combos)
            write_jasmine_report(outcome, out_dir / "tuning_dynamics.csv")
            dyn = outcome.params
            sources["dynamics"] = f"tuned over {len(outcome.rows)} combos"
    return gbm, dyn, sources


def run_experiment(config: ExperimentConfig,
                   log: Optional[Callable[[str], None]] = None) -> RunOutputs:
    log = log or (lambda msg: None)
    started = time.time()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    data, fixed_eval = resolve_dataset(config.dataset)
    log(f"dataset {data.name}: {data.n_rows} rows, {data.n_features} features, "
        f"positive fraction {data.positive_fraction:.4f}")

    gbm_params, dyn_params, sources = _resolve_parameters(
        config, data, fixed_eval, out_dir, log)

    T = config.iterations
    t_refs = default_t_refs(T)
    curves: dict = {}
    audit_rows = []
    u0_sizes = []

    with RunWriter(out_dir) as writer:
        for sim in range(config.sims):
            part = partition(
                data, config.labeled0,
                0 if fixed_eval is not None else config.eval_size,
                fixed_eval, seed=derive_seed(config.seed, PARTITION, sim))
            u0_sizes.append(int(part.unlabeled.size))
            for name in config.methods:
                spec = METHODS[name]
                loop = ActiveLoop(
                    data, part.labeled, part.unlabeled, part.evaluation,
                    spec, gbm_params, dyn_params, config.query_size,
                    master_seed=config.seed, sim=sim,
                    k_folds=config.k_folds,
                    anomaly_trees=config.anomaly_trees,
                    anomaly_subsample=config.anomaly_subsample)
                oracle = SimulatedOracle(data.labels)
                t0 = time.time()
                history = loop.run(
                    oracle, T, closing_eval=True,
                    on_report=lambda r, s=sim, m=name: writer.write_report(s, m, r))
                curves[(sim, name)] = LearningCurve(
                    t=np.array([r.t for r in history]),
                    labeled=np.array([r.labeled_size for r in history]),
                    metric=np.array([r.f1_eval for r in history]),
                    method=name, sim=sim)
                audit_rows.append({
                    "sim": sim, "method": name,
                    "classifier": spec.classifier,
                    "charged": oracle.total_charged,
                    "double_charges": len(oracle.double_charged),
                    "seconds": round(time.time() - t0, 3)})
                log(f"sim {sim} {name}: final F1 "
                    f"{history[-1].f1_eval:.4f} "
                    f"({audit_rows[-1]['seconds']}s)")

    # statistics tables always list methods in registry order, so a later
    # report recomputation reproduces them byte for byte
    canonical = sorted(config.methods, key=lambda m: METHODS[m].method_id)
    area_rows, wilcox_rows = compute_statistics(
        curves, canonical, config.sims, t_refs,
        config.labeled0, config.query_size)
    write_areas(area_rows, out_dir / "areas.csv")
    write_wilcoxon(wilcox_rows, out_dir / "wilcoxon.csv")

    meta = {
        "elapsed_seconds": round(time.time() - started, 3),
        "platform": f"{platform.platform()} python {platform.python_version()} "
                    f"numpy {np.__version__}",
        "config": config_to_mapping(config),
        "parameter_sources": sources,
        "resolved_gbm": {
            **{k: getattr(gbm_params, k) for k in
               ("ntrees", "max_depth", "learn_rate", "learn_rate_annealing",
                "sample_rate", "col_sample_rate", "min_rows", "nbins")},
            **dict(gbm_params.extra)},
        "resolved_dynamics": {
            k: getattr(dyn_params, k)
            for k in ("alpha_a0", "beta", "gamma", "tau")},
        "derived": {
            "iterations_T": T,
            "t_refs": list(t_refs),
            "rows": data.n_rows,
            "feature_count_K": data.n_features,
            "positive_fraction": data.positive_fraction,
            "evaluation": ("fixed block" if fixed_eval is not None
                           else f"sampled per sim (size {config.eval_size})"),
            "unlabeled0_per_sim": u0_sizes,
        },
        "oracle_audit": audit_rows,
    }
    tab = _TABULATED_U0.get((config.dataset.kind, config.labeled0))
    if tab is not None and u0_sizes and u0_sizes[0] != tab:
        meta["derived"]["unlabeled0_note"] = (
            f"derived as rows - labeled0 - eval_size = {u0_sizes[0]}; "
            f"external tabulations list {tab} for this corpus variant at "
            f"labeled0={config.labeled0}; the derivation wins and the "
            f"mismatch is recorded here")
    with open(out_dir / "run_meta.txt", "w", encoding="utf-8") as fh:
        fh.write("experiment record\n")
        fh.write(yaml.safe_dump(meta, sort_keys=False,
                                default_flow_style=False))

    return RunOutputs(out_dir=out_dir, curves=curves, gbm_params=gbm_params,
                      dynamics_params=dyn_params, meta=meta)


def report_from_records(out_dir, methods=None, labeled0: Optional[int] = None,
                        query_size: Optional[int] = None):
    """Recompute the statistics tables from a run directory's curve file."""
    from .records import read_curves
    out_dir = Path(out_dir)
    curves = read_curves(out_dir / "learning_curves.csv")
    sims = sorted({sim for sim, _ in curves})
    names = methods or sorted({m for _, m in curves},
                              key=lambda m: METHODS[m].method_id
                              if m in METHODS else 99)
    some = next(iter(curves.values()))
    if labeled0 is None:
        labeled0 = int(some.labeled[0])
    if query_size is None:
        query_size = (int(some.labeled[1] - some.labeled[0])
                      if some.labeled.size > 1 else 0)
    T = int(max(c.t[-1] for c in curves.values()))
    area_rows, wilcox_rows = compute_statistics(
        curves, names, len(sims), default_t_refs(T), labeled0, query_size)
    write_areas(area_rows, out_dir / "areas.csv")
    write_wilcoxon(wilcox_rows, out_dir / "wilcoxon.csv")
    return area_rows, wilcox_rows
