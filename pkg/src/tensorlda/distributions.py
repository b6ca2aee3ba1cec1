"""Tensor-normal and tensor-elliptical sampling, MCR observation masks."""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tensor import ShapeError


class RngStream:
    """Seeded counter-based (Philox) random stream with named sub-streams.

    ``RngStream(7).child("data").child(3)`` always yields the same sequence,
    independent of how many draws were taken from the parent or siblings.
    """

    def __init__(self, seed: int | str, path: tuple[int, ...] = ()):
        if isinstance(seed, str):
            seed = int(seed.strip(), 0)
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.path = tuple(path)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self.generator = np.random.Generator(np.random.Philox(ss))

    def child(self, key: int | str) -> "RngStream":
        if isinstance(key, str):
            key = zlib.crc32(key.encode("utf-8"))
        return RngStream(self.seed, self.path + (int(key),))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, path={self.path})"


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    return RngStream(rng).generator


def matrix_sqrt_psd(S: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in ``[-tol, 0)`` are clamped to zero; lower ones are an error.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ShapeError("expected a square matrix")
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if np.max(np.abs(S - S.T), initial=0.0) > tol * scale:
        raise ValueError("matrix is not symmetric")
    w, V = np.linalg.eigh((S + S.T) / 2)
    if w.size and w.min() < -tol * scale:
        raise ValueError(f"matrix is not positive semidefinite (smallest eigenvalue {w.min():.3g})")
    w = np.clip(w, 0.0, None)
    R = (V * np.sqrt(w)) @ V.T
    return (R + R.T) / 2


def _is_diagonal(A: np.ndarray) -> bool:
    return np.count_nonzero(A - np.diag(np.diag(A))) == 0


@dataclass(frozen=True, eq=False)
class TensorNormalParams:
    """Mean tensor and mode-wise covariance square roots."""

    mean: np.ndarray
    roots: tuple[np.ndarray, ...]

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        roots = tuple(np.asarray(R, dtype=np.float64) for R in self.roots)
        if len(roots) != mean.ndim:
            raise ShapeError(f"need {mean.ndim} covariance roots, got {len(roots)}")
        for m, R in enumerate(roots):
            if R.shape != (mean.shape[m], mean.shape[m]):
                raise ShapeError(f"root {m} has shape {R.shape}, expected {(mean.shape[m],) * 2}")
            if np.max(np.abs(R - R.T), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(R))):
                raise ValueError(f"root {m} is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "roots", roots)

    @classmethod
    def from_covariances(cls, mean, covariances: Sequence[np.ndarray]) -> "TensorNormalParams":
        return cls(mean, tuple(matrix_sqrt_psd(S) for S in covariances))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.mean.shape


@dataclass(frozen=True, eq=False)
class EllipticalParams:
    """Tensor-elliptical family built as a Gaussian scale mixture.

    ``family`` is ``"gaussian"``, ``"t"`` (with ``df`` > 2) or ``"laplace"``
    (with exponential ``rate`` > 0).
    """

    base: TensorNormalParams
    family: str = "gaussian"
    df: float | None = None
    rate: float | None = None

    def __post_init__(self):
        if self.family == "t":
            if self.df is None or not self.df > 2:
                raise ValueError("student t family needs df > 2")
        elif self.family == "laplace":
            if self.rate is None or not self.rate > 0:
                raise ValueError("laplace family needs rate > 0")
        elif self.family != "gaussian":
            raise ValueError(f"unknown family {self.family!r}")

    @property
    def scale_variance(self) -> float:
        """Second moment of the mixing scale, ``Cov(X) = scale_variance * kron(Sigma)``."""
        if self.family == "t":
            return self.df / (self.df - 2)
        if self.family == "laplace":
            return 1.0 / self.rate
        return 1.0


def _apply_roots(Z: np.ndarray, roots: Sequence[np.ndarray]) -> np.ndarray:
    # Z has a leading batch axis; mode m is axis m + 1
    for m, R in enumerate(roots):
        if _is_diagonal(R):
            shape = [1] * Z.ndim
            shape[m + 1] = R.shape[0]
            diag = np.diag(R).reshape(shape)
            if not np.all(diag == 1.0):
                Z = Z * diag
        else:
            Z = np.moveaxis(np.tensordot(R, Z, axes=(1, m + 1)), 0, m + 1)
    return Z


def sample_tensor_normal(params: TensorNormalParams, rng, size: int | None = None) -> np.ndarray:
    """Draw ``M + Z x_1 R_1 ... x_M R_M`` with i.i.d. standard normal ``Z``.

    With ``size`` set, returns an array of shape ``(size, *params.shape)``.
    """
    gen = as_generator(rng)
    n = 1 if size is None else int(size)
    Z = gen.standard_normal((n,) + params.shape)
    X = _apply_roots(Z, params.roots) + params.mean
    return X[0] if size is None else X


def sample_elliptical(params: EllipticalParams, rng, size: int | None = None) -> np.ndarray:
    """Scale-mixture sampler for the gaussian, student t and laplace families.

    t: ``M + G / sqrt(W / df)`` with ``W ~ chi2(df)``.
    laplace: ``M + sqrt(W) G`` with ``W ~ Exponential(rate)``.
    ``G`` is a centered tensor-normal draw with the base covariance roots.
    """
    if params.family == "gaussian":
        return sample_tensor_normal(params.base, rng, size)
    gen = as_generator(rng)
    n = 1 if size is None else int(size)
    shape = params.base.shape
    G = _apply_roots(gen.standard_normal((n,) + shape), params.base.roots)
    if params.family == "t":
        W = gen.chisquare(params.df, size=n)
        scale = 1.0 / np.sqrt(W / params.df)
    else:
        W = gen.exponential(1.0 / params.rate, size=n)
        scale = np.sqrt(W)
    X = G * scale.reshape((n,) + (1,) * len(shape)) + params.base.mean
    return X[0] if size is None else X


def sample_mask_bernoulli(shape, p: float, rng, size: int | None = None) -> np.ndarray:
    """I.i.d. Bernoulli(``p``) observation indicators as a boolean array."""
    if not 0 < p <= 1:
        raise ValueError(f"observation probability must lie in (0, 1], got {p}")
    shape = tuple(int(d) for d in shape)
    full = shape if size is None else (int(size),) + shape
    if p == 1:
        return np.ones(full, dtype=bool)
    return as_generator(rng).random(full) < p


def mask_from_pattern(shape, pattern) -> np.ndarray:
    """Mask from an explicit 0/1 payload in column-major order."""
    shape = tuple(int(d) for d in shape)
    bits = np.asarray(pattern).ravel()
    if bits.size != int(np.prod(shape)):
        raise ShapeError(f"pattern has {bits.size} entries, shape {shape} needs {int(np.prod(shape))}")
    if not np.all((bits == 0) | (bits == 1)):
        raise ValueError("pattern entries must be 0 or 1")
    return bits.astype(bool).reshape(shape, order="F")
