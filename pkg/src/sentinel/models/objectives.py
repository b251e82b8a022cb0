"""Reference objectives: full-batch losses and analytic gradients.

These are the mathematical ground truth for the training kernels. They
are written for clarity, not speed, and are exercised directly by the
finite-difference gradient checks.

Both objectives share the shape conventions: X is (n, D), W is (K, D)
row per class, b is (K,), y holds class indices into W's rows, and
class_w holds one weight per class. The data term is the mean over the
batch of per-sample weighted losses; the l2 term (l2/2)*||W||^2 never
touches the bias.
"""

from __future__ import annotations

import numpy as np


def softmax(scores: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax."""
    shifted = scores - scores.max(axis=1, keepdims=True)
    np.exp(shifted, out=shifted)
    shifted /= shifted.sum(axis=1, keepdims=True)
    return shifted


def weighted_ce_loss(
    W: np.ndarray,
    b: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    class_w: np.ndarray,
    l2: float,
) -> float:
    scores = X @ W.T + b
    shifted = scores - scores.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(len(y))
    nll = log_norm - shifted[rows, y]
    data = float(np.mean(class_w[y] * nll))
    return data + 0.5 * l2 * float(np.sum(W * W))


def weighted_ce_grad(
    W: np.ndarray,
    b: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    class_w: np.ndarray,
    l2: float,
) -> tuple[np.ndarray, np.ndarray]:
    n = len(y)
    probs = softmax(X @ W.T + b)
    probs[np.arange(n), y] -= 1.0
    probs *= class_w[y][:, None]
    gW = probs.T @ X / n + l2 * W
    gb = probs.sum(axis=0) / n
    return gW, gb


def hinge_loss(
    W: np.ndarray,
    b: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    class_w: np.ndarray,
    l2: float,
) -> float:
    scores = X @ W.T + b
    rows = np.arange(len(y))
    margins = scores + 1.0
    margins[rows, y] -= 1.0
    viol = margins.max(axis=1) - scores[rows, y]
    data = float(np.mean(class_w[y] * np.maximum(viol, 0.0)))
    return data + 0.5 * l2 * float(np.sum(W * W))


def hinge_subgrad(
    W: np.ndarray,
    b: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    class_w: np.ndarray,
    l2: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Subgradient with the most-violating class chosen first-by-index."""
    n = len(y)
    rows = np.arange(n)
    scores = X @ W.T + b
    margins = scores + 1.0
    margins[rows, y] -= 1.0
    worst = margins.argmax(axis=1)
    active = margins[rows, worst] - scores[rows, y] > 0.0
    coef = np.zeros_like(scores)
    hit = rows[active]
    coef[hit, worst[hit]] = class_w[y[hit]]
    coef[hit, y[hit]] -= class_w[y[hit]]
    gW = coef.T @ X / n + l2 * W
    gb = coef.sum(axis=0) / n
    return gW, gb
