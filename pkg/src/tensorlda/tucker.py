"""Tucker low-rank refinement by higher-order orthogonal iteration."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .tensor import (
    ShapeError,
    frob_norm,
    multi_mode_product,
    top_left_singular_vectors,
    unfold,
)

ZERO_NORM = 1e-14
TIE_GAP = 1e-12


class DegenerateInputError(ValueError):
    """The tensor to refine is (numerically) zero."""


@dataclass(frozen=True)
class TuckerRefineConfig:
    ranks: tuple[int, ...]
    tol: float = 1e-6
    max_iter: int = 50

    def __post_init__(self):
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if any(r < 1 for r in self.ranks):
            raise ValueError("ranks must be positive")

    def validate(self, shape: Sequence[int]) -> None:
        if len(self.ranks) != len(shape):
            raise ShapeError(f"{len(self.ranks)} ranks given for an order-{len(shape)} tensor")
        for m, (r, d) in enumerate(zip(self.ranks, shape)):
            if r > d:
                raise ShapeError(f"rank {r} exceeds dimension {d} of mode {m}")


@dataclass(eq=False)
class TuckerRefinement:
    loadings: list[np.ndarray]
    b_tucker: np.ndarray
    core: np.ndarray
    iterations_run: int
    converged: bool
    final_change: float
    fit_history: list[float] = field(default_factory=list)
    tie_warning: bool = False
    degenerate: bool = False


def _lsvd(A: np.ndarray, r: int) -> tuple[np.ndarray, bool]:
    U, s = top_left_singular_vectors(A, r, return_values=True)
    tie = r < s.size and (s[r - 1] - s[r]) < TIE_GAP * max(1.0, s[0])
    return U, bool(tie)


def hosvd_init(b_hat: np.ndarray, ranks: Sequence[int]) -> list[np.ndarray]:
    """Top-``r_m`` left singular vectors of each matricization."""
    b_hat = np.asarray(b_hat, dtype=np.float64)
    TuckerRefineConfig(tuple(ranks)).validate(b_hat.shape)
    if frob_norm(b_hat) <= ZERO_NORM:
        raise DegenerateInputError("cannot initialize loadings from a zero tensor")
    return [_lsvd(unfold(b_hat, m), r)[0] for m, r in enumerate(ranks)]


def _projector_change(U: np.ndarray, V: np.ndarray) -> float:
    return float(np.linalg.norm(U @ U.T - V @ V.T, 2))


def hooi_refine(b_hat: np.ndarray, config: TuckerRefineConfig) -> TuckerRefinement:
    """Refine ``b_hat`` to Tucker rank ``config.ranks``.

    Sweep ``t`` updates mode ``m`` from the projection of ``b_hat`` onto the
    sweep-``t`` frames of modes before ``m`` and the sweep-``t-1`` frames of
    modes after it. Stops after ``max_iter`` sweeps or once every projector
    moves by at most ``tol`` in spectral norm.
    """
    b_hat = np.asarray(b_hat, dtype=np.float64)
    config.validate(b_hat.shape)
    M = b_hat.ndim
    if frob_norm(b_hat) <= ZERO_NORM:
        return TuckerRefinement([], np.zeros_like(b_hat), np.zeros(config.ranks), 0, False, 0.0, degenerate=True)

    U = hosvd_init(b_hat, config.ranks)
    tie = False
    history = [frob_norm(multi_mode_product(b_hat, U, transpose=True))]
    converged = False
    change = np.inf
    t = 0
    while t < config.max_iter:
        t += 1
        prev = list(U)
        for m in range(M):
            mats = [None if k == m else U[k] for k in range(M)]
            Z = multi_mode_product(b_hat, mats, transpose=True)
            U[m], tied = _lsvd(unfold(Z, m), config.ranks[m])
            tie = tie or tied
        history.append(frob_norm(multi_mode_product(b_hat, U, transpose=True)))
        change = max(_projector_change(U[m], prev[m]) for m in range(M))
        if change <= config.tol:
            converged = True
            break

    projected = multi_mode_product(b_hat, U, transpose=True)
    b_tucker = multi_mode_product(projected, U)
    return TuckerRefinement(
        loadings=U,
        b_tucker=b_tucker,
        core=np.abs(projected),
        iterations_run=t,
        converged=converged,
        final_change=float(change),
        fit_history=history,
        tie_warning=tie,
    )


def project(b: np.ndarray, loadings: Sequence[np.ndarray]) -> np.ndarray:
    """``b x_1 U_1 U_1^T ... x_M U_M U_M^T``."""
    return multi_mode_product(b, [U @ U.T for U in loadings])


def projection_error(b_hat: np.ndarray, refinement: TuckerRefinement) -> float:
    """Frobenius distance between ``b_hat`` and its Tucker refinement."""
    return frob_norm(np.asarray(b_hat) - refinement.b_tucker)


def degrees_of_freedom(dims: Sequence[int], ranks: Sequence[int]) -> int:
    """``prod(ranks) + sum_m d_m r_m``."""
    return int(np.prod(ranks)) + int(sum(d * r for d, r in zip(dims, ranks)))
