# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled mini-batch gradient-descent kernels.

Dense-only counterpart of the numpy backend with the same contract:
identical batch schedule (one seeded generator, one permutation per
epoch, consecutive slices), in-place updates of W and b, full-data
objective recorded after every epoch. BLAS handles the matrix products;
row gathering, softmax, and the update loops run as plain C.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

ctypedef cnp.int64_t i64


cdef void _gemm_scores(double* X, double* W, int rows, int K, int D,
                       double* out) noexcept nogil:
    # out(rows,K) = X(rows,D) @ W.T, all buffers row-major.
    # In Fortran terms: out^F(K,rows) = W^F(D,K)^T @ X^F(D,rows).
    cdef double one = 1.0, zero = 0.0
    cdef int m = K, n = rows, k = D
    cdef char ta = b"T", tn = b"N"
    dgemm(&ta, &tn, &m, &n, &k, &one, W, &k, X, &k, &zero, out, &m)


cdef void _gemm_grad(double* Xb, double* coef, int bsz, int K, int D,
                     double inv_bsz, double* G) noexcept nogil:
    # G(K,D) = coef(bsz,K)^T @ Xb(bsz,D) * inv_bsz, row-major buffers.
    # In Fortran terms: G^F(D,K) = Xb^F(D,bsz) @ coef^F(K,bsz)^T.
    cdef double zero = 0.0
    cdef int m = D, n = K, k = bsz
    cdef char tn = b"N", tt = b"T"
    dgemm(&tn, &tt, &m, &n, &k, &inv_bsz, Xb, &m, coef, &n, &zero, G, &m)


cdef double _full_loss_ce(double[:, ::1] X, i64[::1] y, double[::1] class_w,
                          double[:, ::1] W, double[::1] b, double l2,
                          double[:, ::1] S) noexcept nogil:
    cdef int n = X.shape[0], D = X.shape[1], K = W.shape[0]
    cdef int i, c
    cdef double mx, norm, total = 0.0, reg = 0.0
    _gemm_scores(&X[0, 0], &W[0, 0], n, K, D, &S[0, 0])
    for i in range(n):
        mx = S[i, 0] + b[0]
        for c in range(K):
            S[i, c] += b[c]
            if S[i, c] > mx:
                mx = S[i, c]
        norm = 0.0
        for c in range(K):
            norm += exp(S[i, c] - mx)
        total += class_w[y[i]] * (log(norm) - (S[i, y[i]] - mx))
    for c in range(K):
        for i in range(D):
            reg += W[c, i] * W[c, i]
    return total / n + 0.5 * l2 * reg


cdef double _full_loss_hinge(double[:, ::1] X, i64[::1] y, double[::1] class_w,
                             double[:, ::1] W, double[::1] b, double l2,
                             double[:, ::1] S) noexcept nogil:
    cdef int n = X.shape[0], D = X.shape[1], K = W.shape[0]
    cdef int i, c
    cdef double m_val, viol, total = 0.0, reg = 0.0
    _gemm_scores(&X[0, 0], &W[0, 0], n, K, D, &S[0, 0])
    for i in range(n):
        for c in range(K):
            S[i, c] += b[c]
        m_val = S[i, y[i]]
        for c in range(K):
            if c != y[i] and S[i, c] + 1.0 > m_val:
                m_val = S[i, c] + 1.0
        viol = m_val - S[i, y[i]]
        if viol > 0.0:
            total += class_w[y[i]] * viol
    for c in range(K):
        for i in range(D):
            reg += W[c, i] * W[c, i]
    return total / n + 0.5 * l2 * reg


def softmax_epochs(double[:, ::1] X, i64[::1] y, double[::1] class_w,
                   double[:, ::1] W, double[::1] b,
                   double lr, double l2, int batch_size, object seed, int epochs):
    cdef int n = X.shape[0], D = X.shape[1], K = W.shape[0]
    cdef int eff = batch_size if batch_size < n else n
    cdef double[:, ::1] Xb = np.empty((eff, D))
    cdef double[:, ::1] P = np.empty((eff, K))
    cdef double[:, ::1] G = np.empty((K, D))
    cdef double[:, ::1] S = np.empty((n, K))
    cdef i64[::1] yb = np.empty(eff, dtype=np.int64)
    cdef i64[::1] order
    cdef double[::1] history = np.empty(epochs)
    cdef int epoch, start, bsz, i, c, j
    cdef double mx, norm, sw, gb
    rng = np.random.default_rng(seed)
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            bsz = batch_size if start + batch_size <= n else n - start
            for i in range(bsz):
                memcpy(&Xb[i, 0], &X[order[start + i], 0], D * sizeof(double))
                yb[i] = y[order[start + i]]
            _gemm_scores(&Xb[0, 0], &W[0, 0], bsz, K, D, &P[0, 0])
            for i in range(bsz):
                mx = P[i, 0] + b[0]
                for c in range(K):
                    P[i, c] += b[c]
                    if P[i, c] > mx:
                        mx = P[i, c]
                norm = 0.0
                for c in range(K):
                    P[i, c] = exp(P[i, c] - mx)
                    norm += P[i, c]
                sw = class_w[yb[i]]
                for c in range(K):
                    P[i, c] = P[i, c] / norm * sw
                P[i, yb[i]] -= sw
            _gemm_grad(&Xb[0, 0], &P[0, 0], bsz, K, D, 1.0 / bsz, &G[0, 0])
            for c in range(K):
                gb = 0.0
                for i in range(bsz):
                    gb += P[i, c]
                b[c] -= lr * (gb / bsz)
                for j in range(D):
                    W[c, j] -= lr * (G[c, j] + l2 * W[c, j])
        history[epoch] = _full_loss_ce(X, y, class_w, W, b, l2, S)
    return np.asarray(history)


def hinge_epochs(double[:, ::1] X, i64[::1] y, double[::1] class_w,
                 double[:, ::1] W, double[::1] b,
                 double lr, double l2, int batch_size, object seed, int epochs):
    cdef int n = X.shape[0], D = X.shape[1], K = W.shape[0]
    cdef int eff = batch_size if batch_size < n else n
    cdef double[:, ::1] Xb = np.empty((eff, D))
    cdef double[:, ::1] P = np.empty((eff, K))
    cdef double[:, ::1] C = np.empty((eff, K))
    cdef double[:, ::1] G = np.empty((K, D))
    cdef double[:, ::1] S = np.empty((n, K))
    cdef i64[::1] yb = np.empty(eff, dtype=np.int64)
    cdef i64[::1] order
    cdef double[::1] history = np.empty(epochs)
    cdef int epoch, start, bsz, i, c, j, worst
    cdef double m_val, cand, sw, gb
    rng = np.random.default_rng(seed)
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            bsz = batch_size if start + batch_size <= n else n - start
            for i in range(bsz):
                memcpy(&Xb[i, 0], &X[order[start + i], 0], D * sizeof(double))
                yb[i] = y[order[start + i]]
            _gemm_scores(&Xb[0, 0], &W[0, 0], bsz, K, D, &P[0, 0])
            for i in range(bsz):
                for c in range(K):
                    P[i, c] += b[c]
                    C[i, c] = 0.0
                # first-index argmax over margins, margin 0 for the true class
                worst = 0
                m_val = P[i, 0] + (1.0 if yb[i] != 0 else 0.0)
                for c in range(1, K):
                    cand = P[i, c] + (1.0 if yb[i] != c else 0.0)
                    if cand > m_val:
                        m_val = cand
                        worst = c
                if m_val - P[i, yb[i]] > 0.0:
                    sw = class_w[yb[i]]
                    C[i, worst] = sw
                    C[i, yb[i]] -= sw
            _gemm_grad(&Xb[0, 0], &C[0, 0], bsz, K, D, 1.0 / bsz, &G[0, 0])
            for c in range(K):
                gb = 0.0
                for i in range(bsz):
                    gb += C[i, c]
                b[c] -= lr * (gb / bsz)
                for j in range(D):
                    W[c, j] -= lr * (G[c, j] + l2 * W[c, j])
        history[epoch] = _full_loss_hinge(X, y, class_w, W, b, l2, S)
    return np.asarray(history)
