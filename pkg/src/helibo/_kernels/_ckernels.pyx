# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-frame tracking kernels.

Mirrors ``_pykernels`` exactly in semantics; the 7-state constant-velocity
structure is unrolled so no temporary arrays are allocated per call.
"""

import numpy as np
from libc.math cimport isfinite, sqrt


def kf_predict(double[::1] x, double[:, ::1] P, double[:, ::1] Q):
    """Time update in place; returns False if the state went non-finite."""
    cdef int i, j
    cdef bint ok = True
    for i in range(3):
        x[i] += x[i + 4]
    # F P: rows 0..2 pick up rows 4..6
    for i in range(3):
        for j in range(7):
            P[i, j] += P[i + 4, j]
    # (F P) F^T: columns 0..2 pick up columns 4..6
    for i in range(7):
        for j in range(3):
            P[i, j] += P[i, j + 4]
    for i in range(7):
        for j in range(7):
            P[i, j] += Q[i, j]
        if not isfinite(x[i]):
            ok = False
    return ok


cdef int _chol_inv4(double* S, double* out) noexcept nogil:
    """Inverse of a 4x4 SPD matrix via Cholesky; returns -1 if not PD."""
    cdef double L[16]
    cdef double Li[16]
    cdef int i, j, k
    cdef double acc
    for i in range(16):
        L[i] = 0.0
        Li[i] = 0.0
    for j in range(4):
        acc = S[j * 4 + j]
        for k in range(j):
            acc -= L[j * 4 + k] * L[j * 4 + k]
        if acc <= 0.0:
            return -1
        L[j * 4 + j] = sqrt(acc)
        for i in range(j + 1, 4):
            acc = S[i * 4 + j]
            for k in range(j):
                acc -= L[i * 4 + k] * L[j * 4 + k]
            L[i * 4 + j] = acc / L[j * 4 + j]
    # invert the lower-triangular factor
    for j in range(4):
        Li[j * 4 + j] = 1.0 / L[j * 4 + j]
        for i in range(j + 1, 4):
            acc = 0.0
            for k in range(j, i):
                acc -= L[i * 4 + k] * Li[k * 4 + j]
            Li[i * 4 + j] = acc / L[i * 4 + i]
    # S^-1 = Li^T Li
    for i in range(4):
        for j in range(4):
            acc = 0.0
            for k in range(4):
                acc += Li[k * 4 + i] * Li[k * 4 + j]
            out[i * 4 + j] = acc
    return 0


def kf_update(double[::1] x, double[:, ::1] P, double[::1] z, double[:, ::1] R):
    cdef double S_buf[16]
    cdef double Si[16]
    cdef double K[28]
    cdef double A[49]
    cdef double T[49]
    cdef double Pn[49]
    cdef double y[4]
    cdef int i, j, k
    cdef double acc
    for i in range(4):
        for j in range(4):
            S_buf[i * 4 + j] = P[i, j] + R[i, j]
    if _chol_inv4(S_buf, Si) != 0:
        # same failure mode as the numpy path
        raise np.linalg.LinAlgError("innovation covariance is not positive definite")
    # K = P[:, :4] S^-1
    for i in range(7):
        for j in range(4):
            acc = 0.0
            for k in range(4):
                acc += P[i, k] * Si[k * 4 + j]
            K[i * 4 + j] = acc
    for i in range(4):
        y[i] = z[i] - x[i]
    for i in range(7):
        acc = 0.0
        for k in range(4):
            acc += K[i * 4 + k] * y[k]
        x[i] += acc
    # A = I - K H
    for i in range(7):
        for j in range(7):
            A[i * 7 + j] = 1.0 if i == j else 0.0
        for j in range(4):
            A[i * 7 + j] -= K[i * 4 + j]
    # T = A P
    for i in range(7):
        for j in range(7):
            acc = 0.0
            for k in range(7):
                acc += A[i * 7 + k] * P[k, j]
            T[i * 7 + j] = acc
    # Pn = T A^T + K R K^T
    for i in range(7):
        for j in range(7):
            acc = 0.0
            for k in range(7):
                acc += T[i * 7 + k] * A[j * 7 + k]
            Pn[i * 7 + j] = acc
    for i in range(7):
        for j in range(4):
            acc = 0.0
            for k in range(4):
                acc += K[i * 4 + k] * R[k, j]
            T[i * 4 + j] = acc
    for i in range(7):
        for j in range(7):
            acc = 0.0
            for k in range(4):
                acc += T[i * 4 + k] * K[j * 4 + k]
            Pn[i * 7 + j] += acc
    for i in range(7):
        for j in range(7):
            P[i, j] = 0.5 * (Pn[i * 7 + j] + Pn[j * 7 + i])


def iou_matrix(a, b):
    cdef double[:, ::1] A = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 4)
    cdef double[:, ::1] B = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t n = A.shape[0], m = B.shape[0], i, j
    out_arr = np.zeros((n, m))
    cdef double[:, ::1] out = out_arr
    cdef double iw, ih, inter, union
    for i in range(n):
        for j in range(m):
            iw = (min(A[i, 0] + A[i, 2] / 2, B[j, 0] + B[j, 2] / 2)
                  - max(A[i, 0] - A[i, 2] / 2, B[j, 0] - B[j, 2] / 2))
            ih = (min(A[i, 1] + A[i, 3] / 2, B[j, 1] + B[j, 3] / 2)
                  - max(A[i, 1] - A[i, 3] / 2, B[j, 1] - B[j, 3] / 2))
            if iw <= 0.0 or ih <= 0.0:
                continue
            inter = iw * ih
            union = A[i, 2] * A[i, 3] + B[j, 2] * B[j, 3] - inter
            if union > 0.0:
                out[i, j] = inter / union
    return out_arr
