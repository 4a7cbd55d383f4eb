from .calibration import best_f1_cut, transform_prob
from .gbm import (
    GbmEnsemble,
    GbmHyperParams,
    IGNORED_KNOBS,
    TrainedClassifier,
    constant_classifier,
    fit_boosting,
    log_loss,
    stratified_folds,
    train_gbm,
)
from .logreg import train_logreg
from .serialize import dump_model, load_model

__all__ = [
    "GbmEnsemble",
    "GbmHyperParams",
    "IGNORED_KNOBS",
    "TrainedClassifier",
    "best_f1_cut",
    "constant_classifier",
    "dump_model",
    "fit_boosting",
    "load_model",
    "log_loss",
    "stratified_folds",
    "train_gbm",
    "train_logreg",
    "transform_prob",
]
