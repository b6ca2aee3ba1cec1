"""Pure NumPy implementation of the masked covariance kernel.

``masked_gram_ratio(Y, S)`` takes column blocks ``Y`` (float64) and ``S``
(uint8), both of shape ``(T, n, d)``, where ``Y`` is already zero wherever
``S`` is zero. For each column ``t`` it forms

    num[j, l] = sum_i Y[t, i, j] * Y[t, i, l]
    cnt[j, l] = sum_i S[t, i, j] * S[t, i, l]

and returns ``(acc, valid, min_count, first_zero)`` where ``acc[j, l]`` sums
``num / cnt`` over columns with ``cnt > 0``, ``valid`` counts those columns,
``min_count`` is the minimum of ``cnt`` over all columns and ``first_zero``
is the first column with ``cnt == 0`` (``-1`` if none).
"""

import numpy as np

# bounds the (chunk, d, d) temporaries to roughly 64 MB
_CHUNK_BYTES = 1 << 26


def masked_gram_ratio(Y: np.ndarray, S: np.ndarray):
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    S = np.ascontiguousarray(S, dtype=np.uint8)
    if Y.shape != S.shape or Y.ndim != 3:
        raise ValueError("data and mask blocks differ in shape")
    T, n, d = Y.shape
    acc = np.zeros((d, d))
    valid = np.zeros((d, d), dtype=np.int64)
    minc = np.full((d, d), np.iinfo(np.int64).max, dtype=np.int64)
    first_zero = np.full((d, d), -1, dtype=np.int64)
    chunk = max(1, _CHUNK_BYTES // (8 * max(d * d, n * d)))
    for start in range(0, T, chunk):
        stop = min(T, start + chunk)
        Yb = Y[start:stop]
        Sb = S[start:stop].astype(np.float64)
        num = np.matmul(Yb.transpose(0, 2, 1), Yb)
        cnt = np.rint(np.matmul(Sb.transpose(0, 2, 1), Sb)).astype(np.int64)
        np.minimum(minc, cnt.min(axis=0), out=minc)
        zero = cnt == 0
        if zero.any():
            hit = zero.any(axis=0) & (first_zero < 0)
            first_zero[hit] = start + np.argmax(zero, axis=0)[hit]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(zero, 0.0, num / np.where(zero, 1, cnt))
        acc += ratio.sum(axis=0)
        valid += (~zero).sum(axis=0)
    # enforce exact symmetry, matching the compiled kernel
    acc = np.tril(acc) + np.tril(acc, -1).T
    return acc, valid, minc, first_zero
