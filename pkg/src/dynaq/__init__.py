"""Adaptive-query active learning for binary network-intrusion detection.

The package trains a boosted-tree detector inside a pool-based labeling loop
whose query batches mix anomalous, uncertain, and random picks, with the mix
re-balanced every iteration from how informative each group's labels turned
out to be.
"""

from .classifiers import GbmHyperParams, train_gbm, train_logreg
from .config import DatasetSpec, ExperimentConfig, desk_config, load_config
from .data import Dataset, PoolPartition, partition
from .dynamics import (DynamicsParams, FractionBounds, QueryFractions,
                       info_metric, initial_fractions, update_factor,
                       update_fractions)
from .engine import METHODS, ActiveLoop, SimulatedOracle
from .errors import DynaqError
from .harness import run_experiment
from .queries import QueryBatch, build_query_batch
from .stats import curve_area, f1, wilcoxon_one_sided
from .tuning import jasmine_tune, tune_gbm

__version__ = "1.0.0"

__all__ = [
    "ActiveLoop", "Dataset", "DatasetSpec", "DynamicsParams", "DynaqError",
    "ExperimentConfig", "FractionBounds", "GbmHyperParams", "METHODS",
    "PoolPartition", "QueryBatch", "QueryFractions", "SimulatedOracle",
    "build_query_batch", "curve_area", "desk_config", "f1", "info_metric",
    "initial_fractions", "jasmine_tune", "load_config", "partition",
    "run_experiment", "train_gbm", "train_logreg", "tune_gbm",
    "update_factor", "update_fractions", "__version__",
]
