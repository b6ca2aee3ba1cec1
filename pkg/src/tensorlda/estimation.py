"""Generalized sample statistics for tensors observed under MCR missingness.

Samples are stacked along a leading axis: a class with ``n`` tensors of
shape ``(d_1, ..., d_M)`` is an array of shape ``(n, d_1, ..., d_M)`` plus a
boolean mask of the same shape (``True`` = observed).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from . import io
from .kernels import masked_gram_ratio
from .tensor import ShapeError, kron_modes, multi_mode_product, vec


class EstimationError(ValueError):
    pass


class EntryNeverObserved(EstimationError):
    def __init__(self, index, label=None):
        self.index = tuple(int(i) for i in index)
        self.label = label
        where = f" in class {label}" if label is not None else ""
        super().__init__(f"entry {self.index} is never observed{where}")


class ZeroPairCount(EstimationError):
    def __init__(self, mode, j, l, t):
        self.mode, self.j, self.l, self.t = mode, j, l, t
        super().__init__(f"mode {mode}: rows ({j}, {l}) are never jointly observed in column {t}")


class AllPairsUnobserved(EstimationError):
    def __init__(self, mode, j, l):
        self.mode, self.j, self.l = mode, j, l
        super().__init__(f"mode {mode}: rows ({j}, {l}) are never jointly observed in any column")


class FirstEntryUnderObserved(EstimationError):
    pass


class ZeroVariance(EstimationError):
    pass


class NotPositiveDefinite(EstimationError):
    def __init__(self, min_eigenvalue: float, mode: int | None = None):
        self.min_eigenvalue = float(min_eigenvalue)
        self.mode = mode
        where = f"mode {mode} " if mode is not None else ""
        super().__init__(f"{where}covariance is not positive definite (smallest eigenvalue {self.min_eigenvalue:.3g})")


@dataclass(eq=False)
class ClassSample:
    """``n`` tensors of one class with their observation masks."""

    X: np.ndarray
    S: np.ndarray | None = None
    label: int = 1

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim < 2 or self.X.shape[0] < 1:
            raise ShapeError("a class sample needs a leading sample axis and at least one tensor")
        if self.S is None:
            self.S = np.ones(self.X.shape, dtype=bool)
        else:
            self.S = np.asarray(self.S).astype(bool, copy=False)
            if self.S.shape != self.X.shape:
                raise ShapeError(f"mask shape {self.S.shape} differs from data shape {self.X.shape}")
        if self.label not in (1, 2):
            raise ValueError(f"class label must be 1 or 2, got {self.label}")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.X.shape[1:]

    @property
    def complete(self) -> bool:
        return bool(self.S.all())

    @classmethod
    def from_tensors(cls, tensors: Sequence[np.ndarray], masks: Sequence[np.ndarray] | None = None, label: int = 1):
        X = np.stack([np.asarray(t, dtype=np.float64) for t in tensors])
        S = None if masks is None else np.stack([np.asarray(s, dtype=bool) for s in masks])
        return cls(X, S, label)


@dataclass
class PairCountTable:
    """Per-mode minimum over columns of the pooled pair counts, and ``n_*``."""

    min_counts: list[np.ndarray]
    n_star: int


@dataclass(eq=False)
class ModeCovarianceSet:
    sigmas: list[np.ndarray]
    c_sigma_hat: float
    var11_hat: float
    n_star: int
    gammas: tuple[float, ...] = ()

    @property
    def gamma(self) -> float:
        return max(self.gammas, default=0.0)

    def save(self, directory: str | os.PathLike) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for m, S in enumerate(self.sigmas, 1):
            io.write_tensor(d / f"sigma_{m}.tlda", S)
        io.write_kv(
            d / "meta.txt",
            {
                "order": len(self.sigmas),
                "c_sigma_hat": repr(self.c_sigma_hat),
                "var11_hat": repr(self.var11_hat),
                "n_star": self.n_star,
                "gamma": repr(self.gamma),
                "gammas": [repr(g) for g in self.gammas] or "",
            },
        )

    @classmethod
    def load(cls, directory: str | os.PathLike) -> "ModeCovarianceSet":
        d = Path(directory)
        meta = io.read_kv(d / "meta.txt")
        order = int(meta["order"])
        sigmas = [io.read_tensor(d / f"sigma_{m}.tlda") for m in range(1, order + 1)]
        gammas = tuple(float(g) for g in meta.get("gammas", "").split(",") if g.strip())
        return cls(sigmas, float(meta["c_sigma_hat"]), float(meta["var11_hat"]), int(meta["n_star"]), gammas)


@dataclass(eq=False)
class DiscriminantEstimate:
    mean1: np.ndarray
    mean2: np.ndarray
    b_sample: np.ndarray
    priors: tuple[float, float]
    covariances: ModeCovarianceSet
    precisions: list[np.ndarray] = field(default_factory=list)

    @property
    def mean_diff(self) -> np.ndarray:
        return self.mean2 - self.mean1


def _check_pair(samples: Sequence[ClassSample]) -> tuple[int, ...]:
    if not samples:
        raise ValueError("no class samples given")
    shape = samples[0].shape
    for s in samples[1:]:
        if s.shape != shape:
            raise ShapeError(f"class tensor shapes differ: {shape} vs {s.shape}")
    return shape


def observed_counts(sample: ClassSample) -> np.ndarray:
    return sample.S.sum(axis=0)


def generalized_mean(sample: ClassSample) -> np.ndarray:
    """Entrywise average over the samples in which each entry is observed."""
    counts = observed_counts(sample)
    if not counts.all():
        idx = np.argwhere(counts == 0)[0]
        raise EntryNeverObserved(idx, sample.label)
    total = np.where(sample.S, sample.X, 0.0).sum(axis=0)
    return total / counts


def centered_masked(samples: Sequence[ClassSample], means: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Pooled ``(X - mean_k) * S`` and masks, stacked over both classes."""
    Y = np.concatenate([np.where(s.S, s.X - mu, 0.0) for s, mu in zip(samples, means)])
    S = np.concatenate([s.S for s in samples])
    return Y, S


def mode_blocks(A: np.ndarray, m: int, dtype=None) -> np.ndarray:
    """Rearrange stacked tensors ``(n, d_1, ..., d_M)`` into ``(d_-m, n, d_m)``.

    The leading axis enumerates the mode-``m`` matricization columns in the
    column-major order used by :func:`tensorlda.tensor.unfold`.
    """
    order = A.ndim - 1
    rest = [k + 1 for k in range(order) if k != m]
    perm = rest[::-1] + [0, m + 1]
    T = int(np.prod([A.shape[k] for k in rest], dtype=np.int64))
    out = np.ascontiguousarray(np.transpose(A, perm), dtype=dtype)
    return out.reshape(T, A.shape[0], A.shape[m + 1])


def pair_count_table(samples: Sequence[ClassSample], m: int) -> np.ndarray:
    """Full table ``n[j, l, t]`` of pooled joint-observation counts for mode ``m``.

    Materializes ``d_m^2 * d_-m`` integers; meant for small shapes.
    """
    _check_pair(samples)
    S = np.concatenate([s.S for s in samples]).astype(np.int64)
    B = mode_blocks(S, m)
    return np.einsum("tij,til->jlt", B, B)


def pair_counts(samples: Sequence[ClassSample]) -> PairCountTable:
    shape = _check_pair(samples)
    S = np.concatenate([s.S for s in samples])
    mins = []
    for m in range(len(shape)):
        Sb = mode_blocks(S, m, dtype=np.uint8)
        _, _, minc, _ = masked_gram_ratio(np.zeros(Sb.shape), Sb)
        mins.append(minc)
    return PairCountTable(mins, int(min(mc.min() for mc in mins)))


def _mode_covariance_from_pooled(Y, S, m, skip_zero):
    Yb = mode_blocks(Y, m, dtype=np.float64)
    Sb = mode_blocks(S, m, dtype=np.uint8)
    T = Yb.shape[0]
    acc, valid, minc, first_zero = masked_gram_ratio(Yb, Sb)
    del Yb, Sb
    if not skip_zero:
        if (minc == 0).any():
            j, l = np.argwhere(minc == 0)[0]
            raise ZeroPairCount(m, int(j), int(l), int(first_zero[j, l]))
        sigma = acc / T
    else:
        if (valid == 0).any():
            j, l = np.argwhere(valid == 0)[0]
            raise AllPairsUnobserved(m, int(j), int(l))
        sigma = acc / valid
    return sigma, minc


def generalized_mode_covariance(
    samples: Sequence[ClassSample],
    means: Sequence[np.ndarray],
    m: int,
    skip_zero: bool = False,
) -> np.ndarray:
    """Masked, class-centered mode-``m`` covariance.

    Entry ``(j, l)`` averages, over the ``d_-m`` columns ``t``, the sum of
    products of centered observed values divided by the number of samples in
    which both ``(j, t)`` and ``(l, t)`` are observed. With ``skip_zero`` the
    average runs over columns with a positive count only.
    """
    shape = _check_pair(samples)
    if not 0 <= m < len(shape):
        raise ShapeError(f"mode {m} out of range")
    Y, S = centered_masked(samples, means)
    return _mode_covariance_from_pooled(Y, S, m, skip_zero)[0]


def first_entry_variance(samples: Sequence[ClassSample], means: Sequence[np.ndarray]) -> float:
    """Pooled masked variance of entry ``(1, ..., 1)``."""
    num = 0.0
    count = 0
    for s, mu in zip(samples, means):
        x = s.X.reshape(s.n, -1)[:, 0]
        obs = s.S.reshape(s.n, -1)[:, 0]
        num += float(np.sum((x[obs] - mu.flat[0]) ** 2))
        count += int(obs.sum())
    if count < 2:
        raise FirstEntryUnderObserved(f"entry (1, ..., 1) observed {count} time(s); need at least 2")
    var = num / count
    if not var > 0:
        raise ZeroVariance("pooled variance of entry (1, ..., 1) is zero")
    return var


def normalization_constant(samples, means, sigmas) -> tuple[float, float]:
    """``(C_hat, var11_hat)`` with ``C_hat = prod_m sigma_m[0, 0] / var11_hat``."""
    var11 = first_entry_variance(samples, means)
    c_hat = float(np.prod([S[0, 0] for S in sigmas])) / var11
    if not c_hat > 0:
        raise ZeroVariance(f"normalization constant {c_hat} is not positive")
    return c_hat, var11


def apply_normalization(sigmas: Sequence[np.ndarray], c_hat: float) -> list[np.ndarray]:
    """Divide the last mode's covariance by ``c_hat``; other modes unchanged."""
    out = [np.array(S, copy=True) for S in sigmas]
    out[-1] = out[-1] / c_hat
    return out


def estimate_covariances(
    samples: Sequence[ClassSample],
    means: Sequence[np.ndarray] | None = None,
    skip_zero: bool = False,
) -> ModeCovarianceSet:
    shape = _check_pair(samples)
    if means is None:
        means = [generalized_mean(s) for s in samples]
    Y, S = centered_masked(samples, means)
    sigmas, n_star = [], None
    for m in range(len(shape)):
        sigma, minc = _mode_covariance_from_pooled(Y, S, m, skip_zero)
        sigmas.append(sigma)
        n_min = int(minc.min())
        n_star = n_min if n_star is None else min(n_star, n_min)
    del Y, S
    c_hat, var11 = normalization_constant(samples, means, sigmas)
    return ModeCovarianceSet(apply_normalization(sigmas, c_hat), c_hat, var11, n_star)


def precision(sigma: np.ndarray, gamma: float = 0.0) -> np.ndarray:
    """``(sigma + gamma I)^{-1}`` via Cholesky; no silent regularization."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ShapeError("expected a square matrix")
    if gamma < 0:
        raise ValueError("ridge must be nonnegative")
    A = sigma + gamma * np.eye(sigma.shape[0])
    try:
        c, low = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        raise NotPositiveDefinite(np.linalg.eigvalsh((A + A.T) / 2)[0]) from None
    P = scipy.linalg.cho_solve((c, low), np.eye(A.shape[0]))
    return (P + P.T) / 2


def auto_ridge(sigma: np.ndarray) -> float:
    """Fallback ridge ``1e-3 * tr(sigma) / d``."""
    return 1e-3 * float(np.trace(sigma)) / sigma.shape[0]


def discriminant_sample(
    sample1: ClassSample,
    sample2: ClassSample,
    gamma: float | str = 0.0,
    skip_zero: bool = False,
    sigmas: Sequence[np.ndarray] | None = None,
) -> DiscriminantEstimate:
    """Generalized sample discriminant tensor and its ingredients.

    ``gamma="auto"`` retries a mode with :func:`auto_ridge` when its
    covariance is not positive definite; a number applies that ridge to
    every mode. Passing ``sigmas`` skips covariance estimation and plugs the
    given mode covariances in directly.
    """
    samples = (sample1, sample2)
    shape = _check_pair(samples)
    means = [generalized_mean(s) for s in samples]
    if sigmas is None:
        cov = estimate_covariances(samples, means, skip_zero=skip_zero)
    else:
        sigmas = [np.asarray(S, dtype=np.float64) for S in sigmas]
        if [S.shape for S in sigmas] != [(d, d) for d in shape]:
            raise ShapeError("supplied covariances do not match the tensor shape")
        cov = ModeCovarianceSet(sigmas, 1.0, float(np.prod([S[0, 0] for S in sigmas])), pair_counts(samples).n_star)
    precisions, gammas = [], []
    for m, S in enumerate(cov.sigmas):
        g = 0.0 if gamma == "auto" else float(gamma)
        try:
            P = precision(S, g)
        except NotPositiveDefinite as exc:
            if gamma != "auto":
                exc.mode = m
                raise
            g = auto_ridge(S)
            try:
                P = precision(S, g)
            except NotPositiveDefinite as exc2:
                exc2.mode = m
                raise
        precisions.append(P)
        gammas.append(g)
    cov.gammas = tuple(gammas)
    b = multi_mode_product(means[1] - means[0], precisions)
    n1, n2 = sample1.n, sample2.n
    return DiscriminantEstimate(means[0], means[1], b, (n1 / (n1 + n2), n2 / (n1 + n2)), cov, precisions)


def kron_precision_discriminant(mean_diff: np.ndarray, precisions: Sequence[np.ndarray]) -> np.ndarray:
    """Reference path: ``vec(B) = kron(P_M, ..., P_1) vec(D)``; small shapes only."""
    return (kron_modes(precisions) @ vec(mean_diff)).reshape(mean_diff.shape, order="F")
