"""Fisher-type tensor classification rule and evaluation metrics."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from . import io
from .distributions import EllipticalParams, as_generator, sample_elliptical
from .tensor import ShapeError, inner, multi_mode_product, subspace_distance


class IncompleteTestTensor(ValueError):
    """Raised when a tensor to classify has unobserved entries."""


@dataclass(eq=False)
class DiscriminantModel:
    mean_mid: np.ndarray
    b: np.ndarray
    log_prior_ratio: float = 0.0
    provenance: str = "sample"

    def __post_init__(self):
        self.mean_mid = np.asarray(self.mean_mid, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.mean_mid.shape != self.b.shape:
            raise ShapeError(f"midpoint shape {self.mean_mid.shape} differs from discriminant shape {self.b.shape}")
        if not math.isfinite(self.log_prior_ratio):
            raise ValueError("log prior ratio must be finite")

    @classmethod
    def from_estimate(cls, mean1, mean2, b, priors=(0.5, 0.5), provenance="sample"):
        p1, p2 = priors
        return cls((np.asarray(mean1) + np.asarray(mean2)) / 2, b, math.log(p2 / p1), provenance)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.b.shape

    def save(self, directory: str | os.PathLike) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        io.write_tensor(d / "mean_mid.tlda", self.mean_mid)
        io.write_tensor(d / "b.tlda", self.b)
        io.write_kv(d / "model.txt", {"log_prior_ratio": repr(self.log_prior_ratio), "provenance": self.provenance})

    @classmethod
    def load(cls, directory: str | os.PathLike) -> "DiscriminantModel":
        d = Path(directory)
        meta = io.read_kv(d / "model.txt")
        return cls(
            io.read_tensor(d / "mean_mid.tlda"),
            io.read_tensor(d / "b.tlda"),
            float(meta["log_prior_ratio"]),
            meta.get("provenance", "sample"),
        )


def _check_complete(Z: np.ndarray, mask) -> None:
    if mask is not None and not np.all(mask):
        raise IncompleteTestTensor("tensor to classify has unobserved entries")
    if not np.all(np.isfinite(Z)):
        raise IncompleteTestTensor("tensor to classify has non-finite entries")


def score(model: DiscriminantModel, Z: np.ndarray, mask=None) -> float:
    """``<Z - mean_mid, b> + log(pi_2 / pi_1)``."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape != model.shape:
        raise ShapeError(f"tensor shape {Z.shape} differs from model shape {model.shape}")
    _check_complete(Z, mask)
    return inner(Z - model.mean_mid, model.b) + model.log_prior_ratio


def scores(model: DiscriminantModel, Z: np.ndarray, mask=None, chunk: int = 256) -> np.ndarray:
    """Scores for a stack of tensors of shape ``(N, *model.shape)``."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape[1:] != model.shape:
        raise ShapeError(f"stacked shape {Z.shape[1:]} differs from model shape {model.shape}")
    _check_complete(Z, mask)
    b = model.b.ravel()
    offset = float(model.mean_mid.ravel() @ b) - model.log_prior_ratio
    flat = Z.reshape(Z.shape[0], -1)
    out = np.empty(Z.shape[0])
    for start in range(0, Z.shape[0], chunk):
        out[start : start + chunk] = flat[start : start + chunk] @ b - offset
    return out


def predict(model: DiscriminantModel, Z: np.ndarray, mask=None) -> np.ndarray:
    """Labels in {1, 2}; a score of exactly zero goes to class 2."""
    return np.where(scores(model, Z, mask) >= 0, 2, 1)


@dataclass
class EvalReport:
    misclass_rate: float
    confusion: np.ndarray
    err_loading_max: float = float("nan")
    err_b_rel: float = float("nan")
    delta_hat: float = float("nan")
    r_opt: float = float("nan")
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        c = self.confusion
        out = {
            "misclass_rate": self.misclass_rate,
            "err_loading_max": self.err_loading_max,
            "err_b_rel": self.err_b_rel,
            "delta_hat": self.delta_hat,
            "r_opt": self.r_opt,
            "true1_pred1": int(c[0, 0]),
            "true1_pred2": int(c[0, 1]),
            "true2_pred1": int(c[1, 0]),
            "true2_pred2": int(c[1, 1]),
        }
        out.update(self.extra)
        return out

    def save(self, path: str | os.PathLike) -> None:
        io.write_kv(path, {k: repr(v) if isinstance(v, float) else v for k, v in self.as_dict().items()})


def confusion_counts(labels: np.ndarray, predicted: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if not np.isin(labels, (1, 2)).all():
        raise ValueError("labels must be 1 or 2")
    C = np.zeros((2, 2), dtype=np.int64)
    for i in (1, 2):
        for j in (1, 2):
            C[i - 1, j - 1] = int(np.sum((labels == i) & (predicted == j)))
    return C


def evaluate(model: DiscriminantModel, Z: np.ndarray, labels: Sequence[int]) -> EvalReport:
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empty test set")
    C = confusion_counts(labels, predict(model, Z))
    return EvalReport(float((C[0, 1] + C[1, 0]) / labels.size), C)


def misclassification_rate(model: DiscriminantModel, Z: np.ndarray, labels: Sequence[int]) -> float:
    return evaluate(model, Z, labels).misclass_rate


def delta(b: np.ndarray, d_diff: np.ndarray, tol: float = 1e-10) -> float:
    """Signal-to-noise ratio ``sqrt(<b, d_diff>)``."""
    v = inner(b, d_diff)
    if v < -tol:
        raise ValueError(f"<b, D> = {v:.3g} is negative; inputs are inconsistent")
    return math.sqrt(max(v, 0.0))


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def family_cdf(family: str = "gaussian", df: float | None = None, rate: float | None = None):
    """CDF of a unit-direction projection of the whitened predictor.

    gaussian: standard normal; t: Student t with ``df``; laplace (scale
    mixture with Exponential(``rate``) variance): Laplace with scale
    ``1 / sqrt(2 rate)``.
    """
    if family == "gaussian":
        return normal_cdf
    if family == "t":
        return lambda x: float(stats.t.cdf(x, df))
    if family == "laplace":
        scale = 1.0 / math.sqrt(2.0 * rate)
        return lambda x: float(stats.laplace.cdf(x, scale=scale))
    raise ValueError(f"unknown family {family!r}")


def bayes_risk(delta_value: float, pi1: float = 0.5, pi2: float = 0.5, cdf=normal_cdf) -> float:
    """Optimal misclassification rate for signal ``delta_value`` and priors."""
    if abs(pi1 + pi2 - 1) > 1e-12 or not (0 < pi1 < 1):
        raise ValueError("priors must be positive and sum to one")
    if delta_value < 0:
        raise ValueError("delta must be nonnegative")
    if delta_value == 0:
        if pi1 != pi2:
            raise ValueError("delta = 0 is only defined for equal priors")
        return 0.5
    a = math.log(pi2 / pi1) / delta_value
    return pi1 * cdf(a - delta_value / 2) + pi2 * (1 - cdf(a + delta_value / 2))


def loading_error(estimated: Sequence[np.ndarray], truth: Sequence[np.ndarray]) -> float:
    if len(estimated) != len(truth):
        raise ShapeError("different numbers of loading matrices")
    return max(subspace_distance(U, V) for U, V in zip(estimated, truth))


def relative_b_error(b_est: np.ndarray, b_true: np.ndarray) -> float:
    denom = float(np.linalg.norm(np.asarray(b_true).ravel()))
    if denom == 0:
        raise ValueError("true discriminant tensor has zero norm")
    return float(np.linalg.norm((np.asarray(b_est) - b_true).ravel())) / denom


def _class_error_args(model: DiscriminantModel, params: EllipticalParams):
    base = params.base
    loc = inner(base.mean - model.mean_mid, model.b) + model.log_prior_ratio
    # Var of <G, b> for G = Z x_m R_m is ||b x_m R_m^T||_F^2
    spread = float(np.linalg.norm(multi_mode_product(model.b, [R.T for R in base.roots]).ravel()))
    return loc, spread


def conditional_error(model: DiscriminantModel, params: tuple[EllipticalParams, EllipticalParams], priors=(0.5, 0.5)) -> float:
    """Closed-form error of ``model`` on the two-class elliptical mixture."""
    p1, p2 = params
    cdf = family_cdf(p1.family, p1.df, p1.rate)
    errs = []
    for k, p in enumerate((p1, p2)):
        loc, spread = _class_error_args(model, p)
        if spread == 0:
            # deterministic score: class 1 errs when score >= 0, class 2 when < 0
            errs.append(float(loc >= 0) if k == 0 else float(loc < 0))
        else:
            errs.append(1 - cdf(-loc / spread) if k == 0 else cdf(-loc / spread))
    return priors[0] * errs[0] + priors[1] * errs[1]


def conditional_error_mc(
    model: DiscriminantModel,
    params: tuple[EllipticalParams, EllipticalParams],
    draws: int,
    rng,
    priors=(0.5, 0.5),
    chunk: int = 2048,
) -> tuple[float, float]:
    """Monte-Carlo mixture error and its standard error.

    Draws ``draws`` test tensors from each class and weights the per-class
    error rates by ``priors``.
    """
    if draws < 1:
        raise ValueError("draws must be positive")
    gen = as_generator(rng)
    rates = []
    for k, p in enumerate(params):
        wrong = 0
        left = draws
        while left:
            size = min(chunk, left)
            pred = predict(model, sample_elliptical(p, gen, size))
            wrong += int(np.sum(pred != k + 1))
            left -= size
        rates.append(wrong / draws)
    est = priors[0] * rates[0] + priors[1] * rates[1]
    se = math.sqrt(sum(w * w * r * (1 - r) / draws for w, r in zip(priors, rates)))
    return est, se
