import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tensorlda.tensor import (
    ShapeError,
    check_orthonormal,
    fold,
    frob_norm,
    hadamard,
    inner,
    kron,
    kron_modes,
    mode_product,
    multi_mode_product,
    subspace_distance,
    top_left_singular_vectors,
    unfold,
    unfold_modes,
    unvec,
    vec,
)

shapes = st.lists(st.integers(1, 4), min_size=1, max_size=4).map(tuple)
finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def tensors(shape_strategy=shapes):
    return shape_strategy.flatmap(lambda s: arrays(np.float64, s, elements=finite))


def orth(gen, d, r):
    return np.linalg.qr(gen.standard_normal((d, r)))[0]


# ------------------------------------------------------------------ unfolding

def test_unfold_index_map():
    # 1-based entry (2,1,2) of a (2,2,2) tensor goes to row 2, column 3
    X = np.zeros((2, 2, 2))
    X[1, 0, 1] = 7.0
    A = unfold(X, 0)
    assert A.shape == (2, 4)
    assert A[1, 2] == 7.0
    assert np.count_nonzero(A) == 1


def test_unfold_column_formula(rng):
    X = rng.standard_normal((3, 4, 2, 5))
    d = X.shape
    for m in range(4):
        A = unfold(X, m)
        for idx in np.ndindex(*d):
            col, stride = 0, 1
            for k in range(4):
                if k == m:
                    continue
                col += idx[k] * stride
                stride *= d[k]
            assert A[idx[m], col] == X[idx]


def test_unfold_zeros_and_fold_small():
    assert np.array_equal(unfold(np.zeros((2, 3, 4)), 1), np.zeros((3, 8)))
    A = np.array([[1.0], [2.0]])
    assert np.array_equal(fold(A, 0, (2, 1, 1)).ravel(), [1.0, 2.0])


def test_fold_shape_mismatch():
    with pytest.raises(ShapeError):
        fold(np.zeros((3, 4)), 0, (2, 3, 2))
    with pytest.raises(ShapeError):
        unfold(np.zeros((2, 2)), 2)


@given(tensors())
def test_fold_roundtrip(X):
    for m in range(X.ndim):
        assert np.array_equal(fold(unfold(X, m), m, X.shape), X)


@given(tensors())
def test_norm_preservation(X):
    n = np.linalg.norm(vec(X))
    assert np.isclose(frob_norm(X), n)
    for m in range(X.ndim):
        assert np.isclose(np.linalg.norm(unfold(X, m)), n)


def test_unfold_modes():
    X = np.zeros((2, 2, 2))
    X[1, 0, 1] = 1.0
    A = unfold_modes(X, [0, 1])
    assert A.shape == (4, 2)
    assert A[1, 1] == 1.0
    Y = np.arange(24.0).reshape(2, 3, 4)
    assert np.array_equal(unfold_modes(Y, [1]), unfold(Y, 1))
    with pytest.raises(ShapeError):
        unfold_modes(Y, [0, 1, 2])


@given(st.lists(st.integers(1, 3), min_size=2, max_size=4).map(tuple), st.data())
def test_unfold_modes_norm(shape, data):
    X = data.draw(arrays(np.float64, shape, elements=finite))
    modes = data.draw(st.sets(st.integers(0, len(shape) - 1), min_size=1, max_size=len(shape) - 1))
    A = unfold_modes(X, modes)
    assert A.shape[0] == np.prod([shape[m] for m in modes])
    assert np.isclose(np.linalg.norm(A), np.linalg.norm(X))


# ------------------------------------------------------------- mode products

def test_mode_product_identity_and_scaling(rng):
    X = rng.standard_normal((2, 3, 2))
    assert np.array_equal(mode_product(X, np.eye(3), 1), X)
    assert np.array_equal(mode_product(X, 2 * np.eye(3), 1), 2 * X)
    with pytest.raises(ShapeError):
        mode_product(X, np.eye(2), 1)


def test_mode_product_matricization(rng):
    X = rng.standard_normal((2, 3, 2))
    A = rng.standard_normal((4, 3))
    Y = mode_product(X, A, 1)
    assert Y.shape == (2, 4, 2)
    assert np.allclose(unfold(Y, 1), A @ unfold(X, 1), rtol=1e-12, atol=1e-12)


@given(st.lists(st.integers(1, 4), min_size=1, max_size=4).map(tuple), st.integers(0, 2**32 - 1))
def test_kron_vec_identity(shape, seed):
    gen = np.random.default_rng(seed)
    X = gen.standard_normal(shape)
    mats = [gen.standard_normal((gen.integers(1, 4), d)) for d in shape]
    lhs = vec(multi_mode_product(X, mats))
    rhs = kron_modes(mats) @ vec(X)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(rhs).max(initial=0)))


@given(st.lists(st.integers(1, 4), min_size=2, max_size=4).map(tuple), st.integers(0, 2**32 - 1), st.data())
def test_mode_products_commute(shape, seed, data):
    gen = np.random.default_rng(seed)
    m, k = data.draw(st.lists(st.integers(0, len(shape) - 1), min_size=2, max_size=2, unique=True))
    X = gen.standard_normal(shape)
    A = gen.standard_normal((3, shape[m]))
    B = gen.standard_normal((2, shape[k]))
    lhs = mode_product(mode_product(X, A, m), B, k)
    rhs = mode_product(mode_product(X, B, k), A, m)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_multi_mode_product_transpose_and_skip(rng):
    X = rng.standard_normal((3, 4, 2))
    U = [rng.standard_normal((3, 2)), None, rng.standard_normal((2, 2))]
    Y = multi_mode_product(X, U, transpose=True)
    expected = mode_product(mode_product(X, U[0].T, 0), U[2].T, 2)
    assert np.allclose(Y, expected)
    with pytest.raises(ShapeError):
        multi_mode_product(X, U[:2])


def test_vec_is_column_major():
    X = np.arange(8.0).reshape(2, 2, 2)
    v = vec(X)
    assert v[1] == X[1, 0, 0] and v[2] == X[0, 1, 0] and v[4] == X[0, 0, 1]
    assert np.array_equal(unvec(v, X.shape), X)


def test_inner_norm_hadamard(rng):
    X = rng.standard_normal((2, 3))
    assert inner(X, np.zeros_like(X)) == 0.0
    assert frob_norm(np.ones((2, 2, 2))) == pytest.approx(np.sqrt(8))
    assert np.array_equal(hadamard(X, X), X**2)
    with pytest.raises(ShapeError):
        inner(X, X.T)
    with pytest.raises(ShapeError):
        hadamard(X, X.T)


# ----------------------------------------------------------------- Kronecker

def test_kron_trivial(rng):
    assert np.array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))
    B = rng.standard_normal((3, 2))
    assert np.array_equal(kron(np.array([[2.0]]), B), 2 * B)


@given(st.integers(0, 2**32 - 1))
def test_kron_mixed_product(seed):
    gen = np.random.default_rng(seed)
    A, B, C, D = (gen.standard_normal((2, 2)) for _ in range(4))
    assert np.allclose(kron(A, B) @ kron(C, D), kron(A @ C, B @ D), rtol=1e-12, atol=1e-12)


def test_kron_modes_order(rng):
    A, B = rng.standard_normal((2, 2)), rng.standard_normal((3, 3))
    assert np.array_equal(kron_modes([A, B]), np.kron(B, A))


# ---------------------------------------------------------------------- SVD

def test_top_singular_vectors_trivial():
    U = top_left_singular_vectors(np.eye(3), 2)
    assert subspace_distance(U, np.eye(3)[:, :2]) == pytest.approx(0, abs=1e-12)
    u = top_left_singular_vectors(np.diag([3.0, 2.0, 1.0]), 1)
    assert np.array_equal(u[:, 0], [1.0, 0.0, 0.0])
    u = top_left_singular_vectors(-np.diag([3.0, 2.0, 1.0]), 1)
    assert np.array_equal(u[:, 0], [1.0, 0.0, 0.0])


def test_top_singular_vectors_rank2(rng):
    A = rng.standard_normal((5, 2)) @ rng.standard_normal((2, 4))
    U = top_left_singular_vectors(A, 2)
    Uf = np.linalg.svd(A)[0][:, :2]
    assert np.allclose(U @ U.T, Uf @ Uf.T, atol=1e-10)
    check_orthonormal(U)


def test_top_singular_vectors_errors(rng):
    with pytest.raises(ShapeError):
        top_left_singular_vectors(rng.standard_normal((3, 3)), 0)
    with pytest.raises(ShapeError):
        top_left_singular_vectors(rng.standard_normal((3, 2)), 3)
    with pytest.raises(ValueError):
        top_left_singular_vectors(np.array([[np.nan, 1.0], [0.0, 1.0]]), 1)


def test_sign_convention_deterministic(rng):
    A = rng.standard_normal((6, 5))
    U1 = top_left_singular_vectors(A, 3)
    U2 = top_left_singular_vectors(A.copy(), 3)
    assert np.array_equal(U1, U2)
    idx = np.argmax(np.abs(U1), axis=0)
    assert np.all(U1[idx, np.arange(3)] > 0)


def test_subspace_distance_trivial():
    e1, e2 = np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])
    assert subspace_distance(e1, e1) == 0
    assert subspace_distance(e1, e2) == pytest.approx(1.0)


@given(st.integers(0, 2**32 - 1))
def test_subspace_distance_properties(seed):
    gen = np.random.default_rng(seed)
    U, V, W = (orth(gen, 6, 2) for _ in range(3))
    Q = orth(gen, 2, 2)
    assert subspace_distance(U, V @ Q) == pytest.approx(subspace_distance(U, V), abs=1e-12)
    assert subspace_distance(U, V) == pytest.approx(subspace_distance(V, U), abs=1e-14)
    assert subspace_distance(U, W) <= subspace_distance(U, V) + subspace_distance(V, W) + 1e-12


def test_check_orthonormal_rejects():
    with pytest.raises(ValueError):
        check_orthonormal(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ShapeError):
        check_orthonormal(np.ones((2, 3)))
