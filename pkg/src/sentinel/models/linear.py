"""Linear classifiers over fixed feature vectors.

One model type covers the three trainers. Logistic regression and the
linear SVM minimize class-weighted objectives by seeded mini-batch
gradient descent; multinomial naive Bayes is fitted in closed form and
stored in the same linear shape, so prediction is a single code path.

Class weights follow w(c) = N / (K * n_c): classes are penalized in
inverse proportion to their frequency, and a perfectly balanced corpus
gives every class weight 1.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from ..errors import (
    ConfigError,
    CorruptBundleError,
    DegenerateLabelsError,
    DimensionMismatchError,
    ModelError,
    NonFiniteError,
    UnseenLabelError,
)
from . import kernels
from .objectives import softmax

LOSS_KINDS = ("weighted_softmax_ce", "hinge", "nb")


@dataclass(frozen=True)
class Hyper:
    learning_rate: float = 0.1
    epochs: int = 200
    l2: float = 1e-4
    seed: int = 0
    batch_size: int = 32

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if self.l2 < 0:
            raise ConfigError("l2 must be non-negative")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: np.ndarray
    labels: tuple[str, ...]
    loss_kind: str
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        K, D = self.weights.shape
        if K < 2:
            raise DegenerateLabelsError("model needs at least 2 classes")
        if D < 1:
            raise ModelError("feature dimension must be positive")
        if len(self.labels) != K or len(set(self.labels)) != K:
            raise ModelError("labels must be distinct and match weight rows")
        if self.bias.shape != (K,):
            raise DimensionMismatchError(f"bias shape {self.bias.shape} != ({K},)")
        if self.loss_kind not in LOSS_KINDS:
            raise ModelError(f"unknown loss_kind {self.loss_kind!r}")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise NonFiniteError("model parameters contain NaN or Inf")

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def _param_payload(self) -> dict:
        return {
            "loss_kind": self.loss_kind,
            "labels": list(self.labels),
            "dim": self.dim,
            "weights": self.weights.ravel().tolist(),
            "bias": self.bias.tolist(),
        }

    def to_json(self) -> dict:
        payload = self._param_payload()
        payload["training_meta"] = self.training_meta
        return payload

    def param_hash(self) -> str:
        """Hash of the decision-relevant parameters only; lineage excluded."""
        blob = json.dumps(self._param_payload(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def model_id(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def save_model(model: LinearModel, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(model.to_json(), sort_keys=True, separators=(",", ":")),
        encoding="utf-8",
    )


def load_model(path: str | Path) -> LinearModel:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        labels = tuple(str(lbl) for lbl in payload["labels"])
        dim = int(payload["dim"])
        weights = np.asarray(payload["weights"], dtype=np.float64).reshape(
            len(labels), dim
        )
        bias = np.asarray(payload["bias"], dtype=np.float64)
        return LinearModel(
            weights=weights,
            bias=bias,
            labels=labels,
            loss_kind=str(payload["loss_kind"]),
            training_meta=dict(payload.get("training_meta") or {}),
        )
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CorruptBundleError(f"cannot load model from {path}: {exc}") from exc


def compute_class_weights(labels) -> dict[str, float]:
    """w(c) = N / (K * n_c); rarer classes get proportionally larger weights."""
    weights = _class_weights(labels)
    if len(weights) < 2:
        raise DegenerateLabelsError("class weighting needs at least 2 classes")
    return weights


def _class_weights(labels) -> dict[str, float]:
    labels = list(labels)
    if not labels:
        raise DegenerateLabelsError("cannot weight an empty label list")
    counts: dict[str, int] = {}
    for lbl in labels:
        counts[lbl] = counts.get(lbl, 0) + 1
    n_total = len(labels)
    k = len(counts)
    return {c: n_total / (k * n_c) for c, n_c in sorted(counts.items())}


def _validate_features(X) -> None:
    data = X.data if sparse.issparse(X) else X
    if not np.all(np.isfinite(data)):
        raise NonFiniteError("feature matrix contains NaN or Inf")


def _encode(y, labels: tuple[str, ...]) -> np.ndarray:
    index = {lbl: i for i, lbl in enumerate(labels)}
    try:
        return np.array([index[v] for v in y], dtype=np.int64)
    except KeyError as exc:
        raise UnseenLabelError(f"label {exc.args[0]!r} not in model labels") from exc


def _resolve_labels(y, labels) -> tuple[str, ...]:
    seen = set(map(str, y))
    if labels is None:
        resolved = tuple(sorted(seen))
    else:
        resolved = tuple(str(lbl) for lbl in labels)
        if len(set(resolved)) != len(resolved):
            raise ModelError("explicit label order contains duplicates")
        if not seen.issubset(resolved):
            raise UnseenLabelError("y contains labels outside the declared order")
    if len(resolved) < 2:
        raise DegenerateLabelsError("training needs at least 2 distinct classes")
    return resolved


def _weight_array(
    weights: dict[str, float], labels: tuple[str, ...], y_seen: set
) -> np.ndarray:
    missing = [lbl for lbl in y_seen if lbl not in weights]
    if missing:
        raise ModelError(f"no class weight for labels {sorted(missing)}")
    return np.array([float(weights.get(lbl, 0.0)) for lbl in labels])


def _train_gd(kernel, X, y, weights, hyper, labels, loss_kind) -> LinearModel:
    _validate_features(X)
    if X.shape[0] != len(y):
        raise DimensionMismatchError("X and y lengths differ")
    y = [str(v) for v in y]
    resolved = _resolve_labels(y, labels)
    if weights is None:
        weights = compute_class_weights(y)
    hyper = hyper or Hyper()
    class_w = _weight_array(weights, resolved, set(y))
    y_idx = _encode(y, resolved)
    K, D = len(resolved), X.shape[1]
    W = np.zeros((K, D))
    b = np.zeros(K)
    history = kernel(
        X,
        y_idx,
        class_w,
        W,
        b,
        hyper.learning_rate,
        hyper.l2,
        hyper.batch_size,
        hyper.seed,
        hyper.epochs,
    )
    meta = {
        "seed": hyper.seed,
        "epochs": hyper.epochs,
        "learning_rate": hyper.learning_rate,
        "l2": hyper.l2,
        "batch_size": hyper.batch_size,
        "class_weights": {lbl: weights[lbl] for lbl in resolved if lbl in weights},
        "loss_history": [float(v) for v in history],
        "backend": kernels.BACKEND if not sparse.issparse(X) else "python",
    }
    return LinearModel(
        weights=W, bias=b, labels=resolved, loss_kind=loss_kind, training_meta=meta
    )


def train_logreg(X, y, weights=None, hyper: Hyper | None = None, labels=None) -> LinearModel:
    """Class-weighted softmax regression via seeded mini-batch descent."""
    return _train_gd(
        kernels.softmax_epochs, X, y, weights, hyper, labels, "weighted_softmax_ce"
    )


def train_linear_svm(
    X, y, weights=None, hyper: Hyper | None = None, labels=None
) -> LinearModel:
    """Multiclass SVM: subgradient descent on the class-weighted hinge loss."""
    return _train_gd(kernels.hinge_epochs, X, y, weights, hyper, labels, "hinge")


def train_nb(X, y, alpha: float = 1.0, labels=None) -> LinearModel:
    """Multinomial naive Bayes with Laplace smoothing, stored in linear form.

    weights[c][j] = log P(feature j | class c), bias[c] = log P(c); softmax
    of the resulting scores is exactly the NB posterior.
    """
    _validate_features(X)
    if X.shape[0] != len(y):
        raise DimensionMismatchError("X and y lengths differ")
    data = X.data if sparse.issparse(X) else X
    if np.any(data < 0):
        raise ModelError("naive Bayes requires non-negative features")
    y = [str(v) for v in y]
    resolved = _resolve_labels(y, labels)
    y_idx = _encode(y, resolved)
    K, D = len(resolved), X.shape[1]
    onehot = np.zeros((len(y), K))
    onehot[np.arange(len(y)), y_idx] = 1.0
    if sparse.issparse(X):
        counts = np.asarray((X.T @ onehot).T)
    else:
        counts = onehot.T @ X
    totals = counts.sum(axis=1, keepdims=True)
    W = np.log(counts + alpha) - np.log(totals + alpha * D)
    priors = onehot.sum(axis=0) / len(y)
    b = np.log(priors)
    meta = {
        "seed": 0,
        "epochs": 0,
        "learning_rate": 0.0,
        "l2": 0.0,
        "class_weights": None,
        "alpha": alpha,
    }
    return LinearModel(
        weights=W, bias=b, labels=resolved, loss_kind="nb", training_meta=meta
    )


def predict(model: LinearModel, X) -> tuple[list[str], np.ndarray]:
    """Labels and per-class scores, one row per input, input order kept.

    Softmax scores for the probabilistic models, raw margins for hinge.
    Ties at the argmax resolve to the first label in declared order.
    """
    if X.shape[1] != model.dim:
        raise DimensionMismatchError(
            f"input has {X.shape[1]} features, model expects {model.dim}"
        )
    scores = np.asarray(X @ model.weights.T) + model.bias
    if model.loss_kind != "hinge":
        scores = softmax(scores)
    picks = scores.argmax(axis=1)
    return [model.labels[i] for i in picks], scores


def warm_start_train(
    model: LinearModel, X_new, y_new, hyper: Hyper | None = None
) -> LinearModel:
    """Continue gradient descent from an existing model's parameters.

    The new data may cover only a subset of the model's classes; weights
    for absent classes are zero since no sample carries them. Closed-form
    models have no descent state to continue.
    """
    if model.loss_kind == "nb":
        raise ModelError("naive Bayes is closed-form and cannot warm start")
    _validate_features(X_new)
    if X_new.shape[1] != model.dim:
        raise DimensionMismatchError(
            f"input has {X_new.shape[1]} features, model expects {model.dim}"
        )
    y_new = [str(v) for v in y_new]
    y_idx = _encode(y_new, model.labels)
    hyper = hyper or Hyper()
    weights = _class_weights(y_new)
    class_w = _weight_array(weights, model.labels, set(y_new))
    W = model.weights.copy()
    b = model.bias.copy()
    kernel = (
        kernels.softmax_epochs
        if model.loss_kind == "weighted_softmax_ce"
        else kernels.hinge_epochs
    )
    history = kernel(
        X_new,
        y_idx,
        class_w,
        W,
        b,
        hyper.learning_rate,
        hyper.l2,
        hyper.batch_size,
        hyper.seed,
        hyper.epochs,
    )
    meta = {
        "seed": hyper.seed,
        "epochs": hyper.epochs,
        "learning_rate": hyper.learning_rate,
        "l2": hyper.l2,
        "batch_size": hyper.batch_size,
        "class_weights": weights,
        "loss_history": [float(v) for v in history],
        "source_model": model.model_id(),
        "backend": kernels.BACKEND if not sparse.issparse(X_new) else "python",
    }
    return LinearModel(
        weights=W,
        bias=b,
        labels=model.labels,
        loss_kind=model.loss_kind,
        training_meta=meta,
    )
