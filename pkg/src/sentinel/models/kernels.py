"""Training-kernel backend selection.

The compiled extension is preferred when it imported cleanly; the numpy
implementation is the fallback and the only path for sparse matrices.
Setting SENTINEL_PURE_PYTHON=1 forces the fallback, which is useful for
benchmarking and for debugging numerical questions.

Both backends follow one contract: mutate (W, b) in place, consume the
same seeded batch schedule, return the per-epoch full-data objective.
"""

from __future__ import annotations

import os

import numpy as np
from scipy import sparse

from . import _gd_py

if os.environ.get("SENTINEL_PURE_PYTHON") == "1":
    _gd = None
    BACKEND = "python"
else:
    try:
        from . import _gd
    except ImportError:
        _gd = None
    BACKEND = "cython" if _gd is not None else "python"


def _dispatch(name: str, X, y, class_w, W, b, lr, l2, batch_size, seed, epochs):
    if _gd is not None and not sparse.issparse(X):
        X = np.ascontiguousarray(X)
        kernel = getattr(_gd, name)
    else:
        kernel = getattr(_gd_py, name)
    return kernel(X, y, class_w, W, b, lr, l2, batch_size, seed, epochs)


def softmax_epochs(X, y, class_w, W, b, lr, l2, batch_size, seed, epochs):
    return _dispatch("softmax_epochs", X, y, class_w, W, b, lr, l2, batch_size, seed, epochs)


def hinge_epochs(X, y, class_w, W, b, lr, l2, batch_size, seed, epochs):
    return _dispatch("hinge_epochs", X, y, class_w, W, b, lr, l2, batch_size, seed, epochs)
