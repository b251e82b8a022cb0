"""Compare the compiled and numpy training kernels on synthetic workloads.

Runs the same seeded mini-batch descent through both backends, checks that
they agree numerically, and prints a timing table:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --sizes 2000x1542x6 --epochs 50
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sentinel.models import _gd_py
from sentinel.models.kernels import BACKEND

try:
    from sentinel.models import _gd
except ImportError:
    _gd = None


def parse_size(text: str) -> tuple[int, int, int]:
    try:
        n, d, k = (int(part) for part in text.lower().split("x"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"size must look like 1000x256x5, got {text!r}"
        ) from exc
    return n, d, k


def make_problem(n: int, d: int, k: int, seed: int):
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=2.0, size=(k, d))
    y = rng.integers(0, k, size=n)
    X = centers[y] + rng.normal(size=(n, d))
    class_w = np.ones(k)
    return X, y.astype(np.int64), class_w


def run_kernel(kernel, X, y, class_w, k, epochs, repeats):
    best = float("inf")
    W = b = history = None
    for _ in range(repeats):
        W = np.zeros((k, X.shape[1]))
        b = np.zeros(k)
        start = time.perf_counter()
        history = kernel(X, y, class_w, W, b, 0.1, 1e-4, 32, 0, epochs)
        best = min(best, time.perf_counter() - start)
    return best, W, b, np.asarray(history)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--sizes",
        nargs="+",
        type=parse_size,
        default=[(500, 128, 3), (2000, 512, 5), (3500, 1542, 6)],
        metavar="NxDxK",
        help="problem sizes as samples x features x classes",
    )
    parser.add_argument("--epochs", type=int, default=20)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if _gd is None:
        print("compiled extension unavailable; timing the numpy backend only")
    print(f"active package backend: {BACKEND}")
    header = (
        f"{'kernel':<8} {'size':>14} {'numpy (s)':>10} {'compiled (s)':>13} "
        f"{'speedup':>8} {'max |Δ|':>10}"
    )
    print(header)
    print("-" * len(header))

    for n, d, k in args.sizes:
        X, y, class_w = make_problem(n, d, k, args.seed)
        for name in ("softmax_epochs", "hinge_epochs"):
            py_time, W_py, b_py, h_py = run_kernel(
                getattr(_gd_py, name), X, y, class_w, k, args.epochs, args.repeats
            )
            if _gd is None:
                print(f"{name.split('_')[0]:<8} {f'{n}x{d}x{k}':>14} {py_time:>10.3f}")
                continue
            c_time, W_c, b_c, h_c = run_kernel(
                getattr(_gd, name),
                np.ascontiguousarray(X), y, class_w, k, args.epochs, args.repeats,
            )
            delta = max(
                float(np.max(np.abs(W_py - W_c))),
                float(np.max(np.abs(b_py - b_c))),
                float(np.max(np.abs(h_py - h_c))) if h_py.size else 0.0,
            )
            print(
                f"{name.split('_')[0]:<8} {f'{n}x{d}x{k}':>14} {py_time:>10.3f} "
                f"{c_time:>13.3f} {py_time / c_time:>7.1f}x {delta:>10.2e}"
            )
            if delta > 1e-8:
                print(f"  WARNING: backends disagree beyond tolerance ({delta:.2e})")
                return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
