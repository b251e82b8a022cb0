"""Class-weighted linear classifiers with deterministic training."""

from .kernels import BACKEND
from .linear import (
    Hyper,
    LinearModel,
    compute_class_weights,
    load_model,
    predict,
    save_model,
    train_linear_svm,
    train_logreg,
    train_nb,
    warm_start_train,
)

__all__ = [
    "BACKEND",
    "Hyper",
    "LinearModel",
    "compute_class_weights",
    "load_model",
    "predict",
    "save_model",
    "train_linear_svm",
    "train_logreg",
    "train_nb",
    "warm_start_train",
]
