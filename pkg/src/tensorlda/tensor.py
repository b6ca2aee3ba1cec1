"""Dense tensor algebra with column-major index conventions.

Tensors are plain ``numpy.ndarray`` objects of dtype float64 whose axes are
the tensor modes. Modes are 0-based in code (mode ``m`` is axis ``m``).
Every matricization and vectorization follows the column-major convention in
which the first index varies fastest, so that

    vec(X x_1 A_1 ... x_M A_M) = (A_M kron ... kron A_1) vec(X).
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

ORTH_TOL = 1e-10


class ShapeError(ValueError):
    """Raised on non-conformable shapes or out-of-range modes."""


class SVDConvergenceError(RuntimeError):
    pass


def _check_mode(ndim: int, m: int) -> None:
    if not 0 <= m < ndim:
        raise ShapeError(f"mode {m} out of range for order-{ndim} tensor")


def unfold(X: np.ndarray, m: int) -> np.ndarray:
    """Mode-``m`` matricization, shape ``(d_m, d / d_m)``.

    Entry ``X[i_0, ..., i_{M-1}]`` lands at row ``i_m`` and column
    ``sum_{k != m} i_k * prod_{l < k, l != m} d_l``.
    """
    X = np.asarray(X)
    _check_mode(X.ndim, m)
    return np.moveaxis(X, m, 0).reshape(X.shape[m], -1, order="F")


def fold(A: np.ndarray, m: int, shape: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold`."""
    A = np.asarray(A)
    shape = tuple(int(s) for s in shape)
    _check_mode(len(shape), m)
    rest = tuple(s for k, s in enumerate(shape) if k != m)
    if A.ndim != 2 or A.shape[0] != shape[m] or A.shape[1] != int(np.prod(rest, dtype=np.int64)):
        raise ShapeError(f"matrix of shape {A.shape} cannot fold to {shape} along mode {m}")
    return np.moveaxis(A.reshape((shape[m],) + rest, order="F"), 0, m)


def unfold_modes(X: np.ndarray, modes: Iterable[int]) -> np.ndarray:
    """Multi-mode matricization: rows index ``modes``, columns the rest.

    Both row and column multi-indices are column-major over the modes in
    increasing order, regardless of the order ``modes`` is given in.
    """
    X = np.asarray(X)
    rows = sorted(set(int(m) for m in modes))
    if not rows or len(rows) == X.ndim:
        raise ShapeError("mode set must be a nonempty proper subset of the modes")
    for m in rows:
        _check_mode(X.ndim, m)
    cols = [k for k in range(X.ndim) if k not in rows]
    nr = int(np.prod([X.shape[k] for k in rows]))
    # reversing the axis order turns C-order reshape into column-major
    perm = cols[::-1] + rows[::-1]
    return np.transpose(X, perm).reshape(-1, nr).T.copy()


def mode_product(X: np.ndarray, A: np.ndarray, m: int) -> np.ndarray:
    """``X x_m A``: contracts mode ``m`` of ``X`` with the columns of ``A``."""
    X = np.asarray(X, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    _check_mode(X.ndim, m)
    if A.ndim != 2 or A.shape[1] != X.shape[m]:
        raise ShapeError(f"matrix {A.shape} not conformable with mode {m} of size {X.shape[m]}")
    return np.moveaxis(np.tensordot(A, X, axes=(1, m)), 0, m)


def multi_mode_product(
    X: np.ndarray,
    matrices: Sequence[np.ndarray | None],
    transpose: bool = False,
) -> np.ndarray:
    """Apply ``X x_1 A_1 x_2 ... x_M A_M``; ``None`` entries skip a mode."""
    X = np.asarray(X, dtype=np.float64)
    if len(matrices) != X.ndim:
        raise ShapeError(f"need {X.ndim} matrices, got {len(matrices)}")
    for m, A in enumerate(matrices):
        if A is None:
            continue
        X = mode_product(X, A.T if transpose else A, m)
    return X


def inner(X: np.ndarray, Y: np.ndarray) -> float:
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.shape != Y.shape:
        raise ShapeError(f"shape mismatch {X.shape} vs {Y.shape}")
    return float(np.vdot(X, Y))


def frob_norm(X: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(X).ravel()))


def hadamard(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.shape != Y.shape:
        raise ShapeError(f"shape mismatch {X.shape} vs {Y.shape}")
    return X * Y


def vec(X: np.ndarray) -> np.ndarray:
    """Column-major flatten (first index fastest)."""
    return np.asarray(X).ravel(order="F")


def unvec(v: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    return np.asarray(v).reshape(tuple(shape), order="F")


def kron(*mats: np.ndarray) -> np.ndarray:
    """Left-to-right Kronecker product ``mats[0] kron mats[1] kron ...``."""
    out = np.ones((1, 1))
    for A in mats:
        out = np.kron(out, np.atleast_2d(np.asarray(A, dtype=np.float64)))
    return out


def kron_modes(mats: Sequence[np.ndarray]) -> np.ndarray:
    """``A_M kron ... kron A_1`` for mode matrices listed as ``[A_1, ..., A_M]``."""
    return kron(*reversed(list(mats)))


def fix_signs(U: np.ndarray) -> np.ndarray:
    """Flip columns so each column's largest-magnitude entry is positive.

    Ties in magnitude resolve to the lowest row index (``argmax`` semantics).
    """
    U = np.array(U, dtype=np.float64, copy=True)
    if U.size == 0:
        return U
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def top_left_singular_vectors(
    A: np.ndarray, r: int, return_values: bool = False
):
    """Top-``r`` left singular vectors of ``A`` with deterministic signs.

    With ``return_values=True`` also returns the full singular value vector.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ShapeError("expected a matrix")
    if not 1 <= r <= min(A.shape):
        raise ShapeError(f"rank {r} out of range for matrix of shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains non-finite entries")
    try:
        U, s, _ = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SVDConvergenceError(str(exc)) from exc
    U = fix_signs(U[:, :r])
    if return_values:
        return U, s
    return U


def check_orthonormal(U: np.ndarray, tol: float = ORTH_TOL) -> np.ndarray:
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2 or U.shape[1] > U.shape[0]:
        raise ShapeError(f"frame of shape {U.shape} cannot have orthonormal columns")
    err = np.max(np.abs(U.T @ U - np.eye(U.shape[1]))) if U.shape[1] else 0.0
    if err > tol:
        raise ValueError(f"columns not orthonormal (max deviation {err:.3g})")
    return U


def projector(U: np.ndarray) -> np.ndarray:
    return U @ U.T


def subspace_distance(U: np.ndarray, V: np.ndarray) -> float:
    """Spectral norm of ``U U^T - V V^T``."""
    U = np.asarray(U, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    if U.shape[0] != V.shape[0]:
        raise ShapeError(f"ambient dimensions differ: {U.shape[0]} vs {V.shape[0]}")
    D = U @ U.T - V @ V.T
    return float(np.linalg.norm(D, 2))
