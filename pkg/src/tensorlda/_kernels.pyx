# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled masked covariance accumulation.

Same contract as ``tensorlda._kernels_py``. Each column block is reduced
with a symmetric rank-n BLAS update and folded into the running ratio sum
immediately, so memory stays at O(d^2) regardless of the column count.
"""

import numpy as np

from scipy.linalg.cython_blas cimport dsyrk


def masked_gram_ratio(const double[:, :, ::1] Y, const unsigned char[:, :, ::1] S):
    cdef int T = <int>Y.shape[0]
    cdef int n = <int>Y.shape[1]
    cdef int d = <int>Y.shape[2]
    if S.shape[0] != T or S.shape[1] != n or S.shape[2] != d:
        raise ValueError("data and mask blocks differ in shape")

    acc_a = np.zeros((d, d), dtype=np.float64)
    valid_a = np.zeros((d, d), dtype=np.int64)
    minc_a = np.full((d, d), np.iinfo(np.int64).max, dtype=np.int64)
    zero_a = np.full((d, d), -1, dtype=np.int64)
    # column-major scratch: entry (j, l) lives at [l, j] in C indexing
    num_a = np.zeros((d, d), dtype=np.float64)
    cnt_a = np.zeros((d, d), dtype=np.float64)
    sbuf_a = np.zeros((n, d), dtype=np.float64)

    cdef double[:, ::1] acc = acc_a
    cdef long long[:, ::1] valid = valid_a
    cdef long long[:, ::1] minc = minc_a
    cdef long long[:, ::1] first_zero = zero_a
    cdef double[:, ::1] num = num_a
    cdef double[:, ::1] cnt = cnt_a
    cdef double[:, ::1] sbuf = sbuf_a

    cdef int t, i, j, l
    cdef long long c
    cdef char uplo = b'U'
    cdef char trans = b'N'
    cdef double one = 1.0
    cdef double zero = 0.0
    cdef double* ydata

    with nogil:
        for t in range(T):
            # row-major (n, d) block == column-major (d, n) matrix A; A A^T is d x d
            ydata = <double*>&Y[t, 0, 0]
            dsyrk(&uplo, &trans, &d, &n, &one, ydata, &d, &zero, &num[0, 0], &d)
            for i in range(n):
                for j in range(d):
                    sbuf[i, j] = S[t, i, j]
            dsyrk(&uplo, &trans, &d, &n, &one, &sbuf[0, 0], &d, &zero, &cnt[0, 0], &d)
            # upper triangle (column-major) holds j <= l, stored at [l, j]
            for l in range(d):
                for j in range(l + 1):
                    c = <long long>(cnt[l, j] + 0.5)
                    if c < minc[j, l]:
                        minc[j, l] = c
                    if c == 0:
                        if first_zero[j, l] < 0:
                            first_zero[j, l] = t
                    else:
                        acc[j, l] += num[l, j] / c
                        valid[j, l] += 1

        for j in range(d):
            for l in range(j):
                acc[j, l] = acc[l, j]
                valid[j, l] = valid[l, j]
                minc[j, l] = minc[l, j]
                first_zero[j, l] = first_zero[l, j]

    return acc_a, valid_a, minc_a, zero_a
