"""Patch classifiers: majority baseline, HOG + random forest, and a small CNN."""
from .hog import HogParams, hog, hog_many
from .forest import Forest, Tree, fit_forest
from .cnn import CnnModel
from .train import (
    BaselineModel,
    CnnClassifier,
    EvalReport,
    ForestModel,
    TrainConfig,
    baseline_train,
    cnn_train,
    evaluate,
    rf_train,
    roc_auc,
)
from .modelio import load_model, model_id, save_model

__all__ = [
    "HogParams", "hog", "hog_many", "Forest", "Tree", "fit_forest", "CnnModel",
    "BaselineModel", "CnnClassifier", "EvalReport", "ForestModel", "TrainConfig",
    "baseline_train", "cnn_train", "evaluate", "rf_train", "roc_auc",
    "load_model", "model_id", "save_model",
]
