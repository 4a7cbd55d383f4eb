"""Experiment configuration: dataset specs, global loop parameters, and the
YAML config file format used by the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np
import yaml

from .classifiers import GbmHyperParams
from .data import (Dataset, build_nslkdd_rand, load_generic_csv, load_nslkdd,
                   load_unsw)
from .dynamics import DynamicsParams
from .engine import METHOD_ORDER, METHODS
from .errors import SchemaError
from .synth import make_dataset, make_shifted_pair

TUNE = "tune"

DATASET_KINDS = ("nslkdd", "nslkdd-rand", "unsw", "csv",
                 "synthetic", "synthetic-shifted")


@dataclass(frozen=True)
class DatasetSpec:
    """Where the rows come from.  Fields are kind-specific; unused ones stay
    at their defaults."""

    kind: str
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    path: Optional[str] = None
    label_column: str = "label"
    n_rows: int = 2000
    n_pool: int = 2125
    n_eval: int = 1500
    seed: int = 0

    def __post_init__(self):
        if self.kind not in DATASET_KINDS:
            raise SchemaError(f"unknown dataset kind {self.kind!r}; "
                              f"expected one of {DATASET_KINDS}")
        if self.kind in ("nslkdd", "nslkdd-rand"):
            if not self.train_path or not self.test_path:
                raise SchemaError(f"dataset kind {self.kind} needs "
                                  "train_path and test_path")
        if self.kind in ("unsw", "csv") and not self.path:
            raise SchemaError(f"dataset kind {self.kind} needs path")


def resolve_dataset(spec: DatasetSpec):
    """Load or generate the described dataset.  Returns (dataset, fixed_eval_indices or None).

    A fixed evaluation block means every simulation evaluates on those exact
    rows; otherwise the evaluation set is freshly sampled per simulation.
    """
    if spec.kind == "nslkdd":
        train = load_nslkdd(spec.train_path, name="nslkdd-train")
        test = load_nslkdd(spec.test_path, name="nslkdd-test")
        data = build_nslkdd_rand(train, test)
        data.name = "nslkdd"
        fixed = np.arange(train.n_rows, data.n_rows, dtype=np.int64)
        return data, fixed
    if spec.kind == "nslkdd-rand":
        train = load_nslkdd(spec.train_path, name="nslkdd-train")
        test = load_nslkdd(spec.test_path, name="nslkdd-test")
        return build_nslkdd_rand(train, test), None
    if spec.kind == "unsw":
        return load_unsw(spec.path), None
    if spec.kind == "csv":
        return load_generic_csv(spec.path, label_column=spec.label_column), None
    if spec.kind == "synthetic":
        return make_dataset(spec.n_rows, seed=spec.seed), None
    # synthetic-shifted: pool rows first, evaluation rows appended
    pool, evaluation = make_shifted_pair(spec.n_pool, spec.n_eval,
                                         seed=spec.seed)
    data = Dataset(np.vstack([pool.features, evaluation.features]),
                   np.concatenate([pool.labels, evaluation.labels]),
                   name="synthetic-shifted",
                   feature_names=pool.feature_names)
    fixed = np.arange(pool.n_rows, data.n_rows, dtype=np.int64)
    return data, fixed


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSpec
    labeled0: int = 125
    eval_size: int = 5000           # ignored when the dataset fixes the eval block
    query_size: int = 40
    total_queries: int = 15000
    sims: int = 30
    methods: tuple = METHOD_ORDER
    gbm: Union[GbmHyperParams, str] = field(default_factory=GbmHyperParams)
    dynamics: Union[DynamicsParams, str] = field(default_factory=DynamicsParams)
    seed: int = 0
    out_dir: str = "runs/experiment"
    k_folds: int = 5
    anomaly_trees: int = 100
    anomaly_subsample: int = 256
    # tuning directives' knobs
    gbm_time_budget: float = 600.0
    gbm_max_combos: Optional[int] = 60
    jasmine_inner_sims: int = 4
    jasmine_max_combos: Optional[int] = None

    def __post_init__(self):
        if self.query_size < 2:
            raise SchemaError("query_size must be at least 2")
        if self.total_queries < self.query_size:
            raise SchemaError("total_queries must be at least query_size")
        if self.sims < 1:
            raise SchemaError("sims must be at least 1")
        if self.labeled0 < 2:
            raise SchemaError("labeled0 must be at least 2")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise SchemaError(f"unknown methods: {unknown}")
        object.__setattr__(self, "methods", tuple(self.methods))
        for attr in ("gbm", "dynamics"):
            v = getattr(self, attr)
            if isinstance(v, str) and v != TUNE:
                raise SchemaError(f"{attr} must be a mapping or {TUNE!r}")

    @property
    def iterations(self) -> int:
        """T, the number of query rounds."""
        return self.total_queries // self.query_size


def _parse_gbm(raw) -> Union[GbmHyperParams, str]:
    if raw is None:
        return GbmHyperParams()
    if isinstance(raw, str):
        return raw
    if isinstance(raw, GbmHyperParams):
        return raw
    from .tuning import combo_to_params  # late import, avoids a cycle
    return combo_to_params(dict(raw))


def _parse_dynamics(raw) -> Union[DynamicsParams, str]:
    if raw is None:
        return DynamicsParams()
    if isinstance(raw, (str, DynamicsParams)):
        return raw
    return DynamicsParams(**dict(raw))


def config_from_mapping(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise SchemaError("config root must be a mapping")
    raw = dict(raw)
    ds = raw.pop("dataset", None)
    if not isinstance(ds, dict):
        raise SchemaError("config needs a dataset mapping")
    spec = DatasetSpec(**ds)
    kwargs = {}
    for key in ("labeled0", "eval_size", "query_size", "total_queries",
                "sims", "seed", "out_dir", "k_folds", "anomaly_trees",
                "anomaly_subsample", "gbm_time_budget", "gbm_max_combos",
                "jasmine_inner_sims", "jasmine_max_combos"):
        if key in raw:
            kwargs[key] = raw.pop(key)
    if "methods" in raw:
        kwargs["methods"] = tuple(raw.pop("methods"))
    kwargs["gbm"] = _parse_gbm(raw.pop("gbm", None))
    kwargs["dynamics"] = _parse_dynamics(raw.pop("dynamics", None))
    if raw:
        raise SchemaError(f"unknown config keys: {sorted(raw)}")
    return ExperimentConfig(dataset=spec, **kwargs)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    return config_from_mapping(raw)


def config_to_mapping(cfg: ExperimentConfig) -> dict:
    """Resolved config as a plain mapping (for the run metadata dump)."""
    ds = {k: v for k, v in vars(cfg.dataset).items() if v is not None}
    gbm = cfg.gbm if isinstance(cfg.gbm, str) else {
        **{k: getattr(cfg.gbm, k) for k in
           ("ntrees", "max_depth", "learn_rate", "learn_rate_annealing",
            "sample_rate", "col_sample_rate", "min_rows", "nbins")},
        **dict(cfg.gbm.extra)}
    dyn = cfg.dynamics if isinstance(cfg.dynamics, str) else {
        k: getattr(cfg.dynamics, k)
        for k in ("alpha_a0", "beta", "gamma", "tau")}
    return {
        "dataset": ds,
        "labeled0": cfg.labeled0, "eval_size": cfg.eval_size,
        "query_size": cfg.query_size, "total_queries": cfg.total_queries,
        "sims": cfg.sims, "methods": list(cfg.methods),
        "gbm": gbm, "dynamics": dyn, "seed": cfg.seed,
        "out_dir": cfg.out_dir, "k_folds": cfg.k_folds,
        "anomaly_trees": cfg.anomaly_trees,
        "anomaly_subsample": cfg.anomaly_subsample,
    }


def desk_config(out_dir: str = "runs/desk", seed: int = 0) -> ExperimentConfig:
    """Laptop-scale preset: shifted synthetic data, five simulations, the
    fast boosting defaults."""
    return ExperimentConfig(
        dataset=DatasetSpec(kind="synthetic-shifted", n_pool=2125,
                            n_eval=1500, seed=seed),
        labeled0=125, eval_size=1500, query_size=40, total_queries=2000,
        sims=5, gbm=GbmHyperParams(), dynamics=DynamicsParams(),
        seed=seed, out_dir=out_dir)


def paper_scale_config(train_path: str, test_path: str,
                       out_dir: str = "runs/full",
                       seed: int = 0) -> ExperimentConfig:
    """Full-scale preset on the fixed-split intrusion corpus."""
    return ExperimentConfig(
        dataset=DatasetSpec(kind="nslkdd", train_path=train_path,
                            test_path=test_path),
        labeled0=125, eval_size=22544, query_size=40, total_queries=15000,
        sims=30, gbm=TUNE, dynamics=TUNE, seed=seed, out_dir=out_dir)
