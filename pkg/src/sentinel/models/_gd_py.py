"""Mini-batch gradient-descent kernels, numpy implementation.

Fallback backend used when the compiled extension is unavailable, and
the only backend for sparse feature matrices. Both kernels mutate W and
b in place (warm starts pass existing parameters) and return the
full-data objective recorded after every epoch.

The batch schedule is owned by the kernel: one seeded generator drives
one permutation per epoch, consumed in consecutive slices, so the same
seed yields the same parameter trajectory on every run.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse


def _rows(X, idx):
    return X[idx]


def _full_loss(kind: str, W, b, X, y, class_w, l2: float) -> float:
    # CSR @ dense yields ndarray, so one expression covers both layouts.
    scores = X @ W.T + b
    rows = np.arange(len(y))
    if kind == "ce":
        shifted = scores - scores.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=1))
        per_sample = log_norm - shifted[rows, y]
    else:
        margins = scores + 1.0
        margins[rows, y] -= 1.0
        per_sample = np.maximum(margins.max(axis=1) - scores[rows, y], 0.0)
    return float(np.mean(class_w[y] * per_sample)) + 0.5 * l2 * float(np.sum(W * W))


def softmax_epochs(X, y, class_w, W, b, lr, l2, batch_size, seed, epochs):
    n = X.shape[0]
    rng = np.random.default_rng(seed)
    history = np.empty(epochs)
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            Xb = _rows(X, idx)
            yb = y[idx]
            bsz = len(yb)
            probs = Xb @ W.T + b
            probs -= probs.max(axis=1, keepdims=True)
            np.exp(probs, out=probs)
            probs /= probs.sum(axis=1, keepdims=True)
            probs[np.arange(bsz), yb] -= 1.0
            probs *= class_w[yb][:, None]
            if sparse.issparse(Xb):
                gW = (Xb.T @ probs).T / bsz + l2 * W
            else:
                gW = probs.T @ Xb / bsz + l2 * W
            gb = probs.sum(axis=0) / bsz
            W -= lr * gW
            b -= lr * gb
        history[epoch] = _full_loss("ce", W, b, X, y, class_w, l2)
    return history


def hinge_epochs(X, y, class_w, W, b, lr, l2, batch_size, seed, epochs):
    n = X.shape[0]
    rng = np.random.default_rng(seed)
    history = np.empty(epochs)
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            Xb = _rows(X, idx)
            yb = y[idx]
            bsz = len(yb)
            rows = np.arange(bsz)
            scores = Xb @ W.T + b
            margins = scores + 1.0
            margins[rows, yb] -= 1.0
            worst = margins.argmax(axis=1)
            active = margins[rows, worst] - scores[rows, yb] > 0.0
            coef = np.zeros_like(scores)
            hit = rows[active]
            coef[hit, worst[hit]] = class_w[yb[hit]]
            coef[hit, yb[hit]] -= class_w[yb[hit]]
            if sparse.issparse(Xb):
                gW = (Xb.T @ coef).T / bsz + l2 * W
            else:
                gW = coef.T @ Xb / bsz + l2 * W
            gb = coef.sum(axis=0) / bsz
            W -= lr * gW
            b -= lr * gb
        history[epoch] = _full_loss("hinge", W, b, X, y, class_w, l2)
    return history
