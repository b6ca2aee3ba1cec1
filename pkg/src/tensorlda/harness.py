"""Simulation engine: planted Tucker discriminants, replicates, grids, CV."""

from __future__ import annotations

import configparser
import csv
import dataclasses
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import classify, estimation
from .classify import DiscriminantModel
from .distributions import (
    EllipticalParams,
    RngStream,
    TensorNormalParams,
    as_generator,
    sample_elliptical,
    sample_mask_bernoulli,
)
from .estimation import ClassSample
from .tensor import (
    ShapeError,
    SVDConvergenceError,
    fold,
    kron_modes,
    multi_mode_product,
    unfold,
    vec,
)
from .tucker import DegenerateInputError, TuckerRefineConfig, degrees_of_freedom, hooi_refine

CSV_FIELDS = [
    "scenario_id", "replicate", "seed", "M", "dims", "ranks", "n_per_class", "eps", "sigma_m", "c",
    "family", "err_b_rel", "err_loading_max", "misclass_sample", "misclass_tucker", "delta_hat",
    "r_opt", "hooi_iters", "gamma", "failed", "wall_ms",
]
METRICS = ["err_b_rel", "err_loading_max", "misclass_sample", "misclass_tucker", "delta_hat", "r_opt", "hooi_iters", "gamma"]
ORACLE_MAX_DIM = 512


class GridError(ValueError):
    pass


class CoreConstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation setting; ``n1``/``n2`` are per-class training sizes."""

    scenario_id: str = "s0"
    dims: tuple[int, ...] = (20, 20, 20)
    ranks: tuple[int, ...] = (5, 5, 5)
    n1: int = 400
    n2: int = 400
    eps: float = 0.0
    sigma_m: float = 1.5
    c: float = 1.0
    family: str = "gaussian"
    df: float = 5.0
    rate: float = 2.0
    replicates: int = 1
    test_per_class: int = 500
    seed: int = 0
    ridge: str = "auto"
    tol: float = 1e-6
    max_iter: int = 50
    core_spread: float = 3.0
    fixed_truth: bool = False
    skip_zero: bool = False

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if len(self.dims) != len(self.ranks) or not self.dims:
            raise ValueError("dims and ranks must have the same nonzero length")
        if any(not 1 <= r <= d for r, d in zip(self.ranks, self.dims)):
            raise ValueError("each rank must lie in [1, dim]")
        if not 0 <= self.eps < 1:
            raise ValueError("missing rate must lie in [0, 1)")
        if not (self.sigma_m > 0 and self.c > 0):
            raise ValueError("sigma_m and c must be positive")
        if self.replicates < 1 or self.n1 < 1 or self.n2 < 1 or self.test_per_class < 1:
            raise ValueError("replicates and sample sizes must be positive")
        if self.family not in ("gaussian", "t", "laplace"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.ridge != "auto":
            float(self.ridge)

    @property
    def M(self) -> int:
        return len(self.dims)

    @property
    def n_total(self) -> int:
        return self.n1 + self.n2

    @property
    def family_label(self) -> str:
        if self.family == "t":
            return f"t({self.df:g})"
        if self.family == "laplace":
            return f"laplace({self.rate:g})"
        return "gaussian"

    @property
    def sqrt_df(self) -> float:
        return math.sqrt(degrees_of_freedom(self.dims, self.ranks))

    def memory_estimate_bytes(self) -> int:
        """Rough peak memory of one replicate."""
        d = int(np.prod(self.dims))
        # raw data, pooled centered copy and one mode-block copy, plus masks
        return int(d * self.n_total * (3 * 8 + 3) + d * 8 * 2048)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


@dataclass(eq=False)
class Truth:
    mean1: np.ndarray
    mean2: np.ndarray
    roots: list[np.ndarray]
    b: np.ndarray
    loadings: list[np.ndarray]
    core: np.ndarray
    delta: float

    @property
    def sigmas(self) -> list[np.ndarray]:
        return [R @ R for R in self.roots]


@dataclass
class ReplicateRecord:
    scenario_id: str
    replicate: int
    seed: int
    M: int
    dims: str
    ranks: str
    n_per_class: int
    eps: float
    sigma_m: float
    c: float
    family: str
    err_b_rel: float = float("nan")
    err_loading_max: float = float("nan")
    misclass_sample: float = float("nan")
    misclass_tucker: float = float("nan")
    delta_hat: float = float("nan")
    r_opt: float = float("nan")
    hooi_iters: int = 0
    gamma: float = 0.0
    failed: str = ""
    wall_ms: float = 0.0

    def row(self) -> dict:
        return {k: getattr(self, k) for k in CSV_FIELDS}


def _mode_spectra(F: np.ndarray) -> list[np.ndarray]:
    return [np.linalg.svd(unfold(F, m), compute_uv=False)[: F.shape[m]] for m in range(F.ndim)]


def gen_core_tensor(ranks: Sequence[int], sigma_target: float, rng, spread: float = 3.0, max_rounds: int = 20) -> np.ndarray:
    """Random core whose every matricization has smallest singular value ``sigma_target``.

    Starts from a Gaussian core and, mode by mode, lifts singular values below
    ``s_max / spread`` up to that floor until all mode spectra (pooled) have
    max/min ratio at most ``spread``; the core is then rescaled so the
    smallest mode-wise minimum equals ``sigma_target``.
    """
    if not sigma_target > 0:
        raise ValueError("sigma_target must be positive")
    if spread < 1:
        raise ValueError("spread must be at least 1")
    ranks = tuple(int(r) for r in ranks)
    F = as_generator(rng).standard_normal(ranks)
    for k in range(max_rounds + 1):
        spectra = _mode_spectra(F)
        pooled = np.concatenate(spectra)
        if pooled.max() <= spread * pooled.min() * (1 + 1e-9):
            break
        # lifting one mode perturbs the others, so aim a little inside the bound
        inner = max(1.0, spread / (1 + 0.05 * (k + 1)))
        for m in range(F.ndim):
            U, s, Vt = np.linalg.svd(unfold(F, m), full_matrices=False)
            s = np.maximum(s, s.max() / inner)
            F = fold((U * s) @ Vt, m, F.shape)
    else:
        raise CoreConstructionError(f"core spectra did not equalize within {max_rounds} rounds")
    return F * (sigma_target / min(s.min() for s in _mode_spectra(F)))


def gen_loadings(dims: Sequence[int], ranks: Sequence[int], rng) -> list[np.ndarray]:
    """Orthonormal frames from QR of Gaussian matrices, with ``diag(R) > 0``."""
    gen = as_generator(rng)
    out = []
    for d, r in zip(dims, ranks):
        if r > d:
            raise ShapeError(f"rank {r} exceeds dimension {d}")
        Q, R = np.linalg.qr(gen.standard_normal((d, r)))
        out.append(Q * np.sign(np.where(np.diag(R) == 0, 1.0, np.diag(R))))
    return out


def build_scenario(cfg: ScenarioConfig, rng) -> Truth:
    """Planted truth: ``B = F x_m U_m``, ``Sigma_m = c^(1/M) I``, means ``0`` and ``c B``."""
    rng = rng if isinstance(rng, RngStream) else RngStream(rng)
    core = gen_core_tensor(cfg.ranks, cfg.sigma_m, rng.child("core"), spread=cfg.core_spread)
    loadings = gen_loadings(cfg.dims, cfg.ranks, rng.child("loadings"))
    b = multi_mode_product(core, loadings)
    root = cfg.c ** (1.0 / (2 * cfg.M))
    roots = [root * np.eye(d) for d in cfg.dims]
    mean1 = np.zeros(cfg.dims)
    mean2 = cfg.c * b
    return Truth(mean1, mean2, roots, b, loadings, core, classify.delta(b, mean2 - mean1))


def _family_params(cfg: ScenarioConfig, mean, roots) -> EllipticalParams:
    base = TensorNormalParams(mean, tuple(roots))
    if cfg.family == "t":
        return EllipticalParams(base, "t", df=cfg.df)
    if cfg.family == "laplace":
        return EllipticalParams(base, "laplace", rate=cfg.rate)
    return EllipticalParams(base)


def family_cdf(cfg: ScenarioConfig):
    return classify.family_cdf(cfg.family, cfg.df, cfg.rate)


def replicate_seed(cfg: ScenarioConfig, replicate: int) -> int:
    return int(cfg.seed) + int(replicate)


def _record_stub(cfg: ScenarioConfig, replicate: int) -> ReplicateRecord:
    return ReplicateRecord(
        scenario_id=cfg.scenario_id,
        replicate=replicate,
        seed=replicate_seed(cfg, replicate),
        M=cfg.M,
        dims="x".join(map(str, cfg.dims)),
        ranks="x".join(map(str, cfg.ranks)),
        n_per_class=cfg.n1,
        eps=cfg.eps,
        sigma_m=cfg.sigma_m,
        c=cfg.c,
        family=cfg.family_label,
    )


def fit_models(sample1: ClassSample, sample2: ClassSample, ranks, ridge="auto", tol=1e-6, max_iter=50, skip_zero=False):
    """Estimate, refine and wrap both classifiers; returns ``(estimate, refinement, sample_model, tucker_model)``."""
    gamma = ridge if ridge == "auto" else float(ridge)
    est = estimation.discriminant_sample(sample1, sample2, gamma=gamma, skip_zero=skip_zero)
    ref = hooi_refine(est.b_sample, TuckerRefineConfig(tuple(ranks), tol, max_iter))
    m_sample = DiscriminantModel.from_estimate(est.mean1, est.mean2, est.b_sample, est.priors, "sample")
    m_tucker = DiscriminantModel.from_estimate(est.mean1, est.mean2, ref.b_tucker, est.priors, f"tucker{tuple(ranks)}")
    return est, ref, m_sample, m_tucker


def run_replicate(cfg: ScenarioConfig, replicate: int = 0, truth: Truth | None = None, test_chunk: int = 250) -> ReplicateRecord:
    """Simulate, fit and evaluate one replicate; estimator failures go in ``failed``."""
    t0 = time.perf_counter()
    rec = _record_stub(cfg, replicate)
    stream = RngStream(rec.seed)
    if truth is None:
        truth = build_scenario(cfg, RngStream(cfg.seed).child("truth") if cfg.fixed_truth else stream.child("truth"))
    params = [_family_params(cfg, mu, truth.roots) for mu in (truth.mean1, truth.mean2)]
    p_obs = 1.0 - cfg.eps
    samples = []
    for k, n in ((1, cfg.n1), (2, cfg.n2)):
        X = sample_elliptical(params[k - 1], stream.child(f"train{k}"), n)
        S = sample_mask_bernoulli(cfg.dims, p_obs, stream.child(f"mask{k}"), n)
        samples.append(ClassSample(X, S, label=k))
    try:
        est, ref, m_sample, m_tucker = fit_models(
            samples[0], samples[1], cfg.ranks, cfg.ridge, cfg.tol, cfg.max_iter, cfg.skip_zero
        )
    except (estimation.EstimationError, SVDConvergenceError, DegenerateInputError) as exc:
        rec.failed = type(exc).__name__
        rec.wall_ms = (time.perf_counter() - t0) * 1e3
        return rec
    del samples

    wrong = {"sample": 0, "tucker": 0}
    for k in (1, 2):
        gen = stream.child(f"test{k}").generator
        left = cfg.test_per_class
        while left:
            size = min(test_chunk, left)
            Z = sample_elliptical(params[k - 1], gen, size)
            for name, model in (("sample", m_sample), ("tucker", m_tucker)):
                wrong[name] += int(np.sum(classify.predict(model, Z) != k))
            left -= size
    n_test = 2 * cfg.test_per_class

    rec.misclass_sample = wrong["sample"] / n_test
    rec.misclass_tucker = wrong["tucker"] / n_test
    rec.err_b_rel = classify.relative_b_error(ref.b_tucker, truth.b)
    rec.err_loading_max = classify.loading_error(ref.loadings, truth.loadings) if ref.loadings else float("nan")
    rec.delta_hat = classify.delta(est.b_sample, est.mean_diff)
    rec.r_opt = classify.bayes_risk(truth.delta, 0.5, 0.5, family_cdf(cfg))
    rec.hooi_iters = ref.iterations_run
    rec.gamma = est.covariances.gamma
    rec.wall_ms = (time.perf_counter() - t0) * 1e3
    return rec


def _run_one(args):
    cfg, rep = args
    return run_replicate(cfg, rep)


def run_grid(
    grid: Sequence[ScenarioConfig],
    out: str | os.PathLike | None = None,
    summary: str | os.PathLike | None = None,
    jobs: int = 1,
    progress=None,
) -> list[ReplicateRecord]:
    """Run every replicate of every scenario; rows come out in (scenario, replicate) order."""
    grid = list(grid)
    if not grid:
        raise GridError("empty scenario grid")
    ids = [cfg.scenario_id for cfg in grid]
    if len(set(ids)) != len(ids):
        raise GridError("scenario ids must be unique")
    tasks = [(cfg, r) for cfg in grid for r in range(cfg.replicates)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_one, tasks))
    else:
        records = []
        for task in tasks:
            records.append(_run_one(task))
            if progress is not None:
                progress(records[-1])
    if out is not None:
        write_csv(out, records)
    if summary is not None:
        write_summary(summary, grid, records)
    return records


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else "nan"
    return v


def write_csv(path, records: Iterable[ReplicateRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        for rec in records:
            w.writerow({k: _fmt(v) for k, v in rec.row().items()})


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


SUMMARY_FIELDS = ["scenario_id", "M", "dims", "ranks", "n_per_class", "n_total", "eps", "sigma_m", "c", "family", "sqrt_df", "replicates", "failures"]


def summarize(grid: Sequence[ScenarioConfig], records: Sequence[ReplicateRecord]) -> list[dict]:
    """Per-scenario mean and sample sd of each metric over successful replicates."""
    rows = []
    for cfg in grid:
        recs = [r for r in records if r.scenario_id == cfg.scenario_id]
        ok = [r for r in recs if not r.failed]
        row = {
            "scenario_id": cfg.scenario_id, "M": cfg.M, "dims": "x".join(map(str, cfg.dims)),
            "ranks": "x".join(map(str, cfg.ranks)), "n_per_class": cfg.n1, "n_total": cfg.n_total,
            "eps": cfg.eps, "sigma_m": cfg.sigma_m, "c": cfg.c, "family": cfg.family_label,
            "sqrt_df": cfg.sqrt_df, "replicates": len(recs), "failures": len(recs) - len(ok),
        }
        for key in METRICS:
            vals = np.array([getattr(r, key) for r in ok], dtype=float)
            vals = vals[np.isfinite(vals)]
            row[f"{key}_mean"] = float(vals.mean()) if vals.size else float("nan")
            row[f"{key}_sd"] = float(vals.std(ddof=1)) if vals.size > 1 else float("nan")
        rows.append(row)
    return rows


def write_summary(path, grid, records) -> None:
    rows = summarize(grid, records)
    fields = SUMMARY_FIELDS + [f"{k}_{s}" for k in METRICS for s in ("mean", "sd")]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})


# ---------------------------------------------------------------- config files

_INT_KEYS = {"n1", "n2", "replicates", "test_per_class", "max_iter"}
_FLOAT_KEYS = {"eps", "sigma_m", "c", "df", "rate", "tol", "core_spread"}
_BOOL_KEYS = {"fixed_truth", "skip_zero"}
_TUPLE_KEYS = {"dims", "ranks"}


def _parse_fraction(text: str) -> float:
    if "/" in text:
        a, b = text.split("/", 1)
        return float(a) / float(b)
    return float(text)


def config_from_mapping(values: dict, scenario_id: str = "s0") -> ScenarioConfig:
    kw: dict = {"scenario_id": values.get("scenario_id", scenario_id)}
    for key, raw in values.items():
        raw = str(raw).strip()
        if key in ("scenario_id",):
            continue
        if key in _TUPLE_KEYS:
            kw[key] = tuple(int(x) for x in raw.replace("x", ",").split(",") if x.strip())
        elif key in _INT_KEYS:
            kw[key] = int(raw)
        elif key in _FLOAT_KEYS:
            kw[key] = _parse_fraction(raw)
        elif key in _BOOL_KEYS:
            kw[key] = raw.lower() in ("1", "true", "yes", "on")
        elif key == "seed":
            kw[key] = int(raw, 0)
        elif key == "n_per_class":
            kw["n1"] = kw["n2"] = int(raw)
        elif key == "n_total":
            n = int(raw)
            if n % 2:
                raise ValueError("n_total must be even (equal class sizes)")
            kw["n1"] = kw["n2"] = n // 2
        elif key in ("family", "ridge"):
            kw[key] = raw
        elif key == "M":
            continue
        else:
            raise ValueError(f"unknown config key {key!r}")
    if "ranks" in kw and "dims" not in kw:
        kw["dims"] = ScenarioConfig.dims if len(kw["ranks"]) == 3 else tuple([20] * len(kw["ranks"]))
    if "dims" in kw and "ranks" not in kw:
        kw["ranks"] = tuple(min(5, d) for d in kw["dims"])
    return ScenarioConfig(**kw)


def load_config(path: str | os.PathLike) -> list[ScenarioConfig]:
    """Scenario grid from a key-value file.

    Keys before any ``[section]`` header (or in ``[DEFAULT]``) apply to every
    scenario; each section is one scenario named after the section. A file
    without sections describes a single scenario.
    """
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    parser.read_string("[DEFAULT]\n" + text)
    sections = parser.sections()
    if not sections:
        return [config_from_mapping(dict(parser.defaults()), Path(path).stem)]
    return [config_from_mapping(dict(parser[name]), name) for name in sections]


# -------------------------------------------------------------------- presets

def preset_grid(name: str, full_scale: bool = False, replicates: int = 20, seed: int = 2024) -> list[ScenarioConfig]:
    """Scenario grids mirroring the published sweeps.

    Desk scale shrinks order-3 dimensions to 20 and order-4 dimensions to 8.
    """
    d3 = 40 if full_scale else 20
    base = ScenarioConfig(dims=(d3,) * 3, ranks=(5, 5, 5), replicates=replicates, seed=seed)
    eps_grid = (0.0, 0.15, 0.3, 0.5, 0.7)
    grid: list[ScenarioConfig] = []
    if name in ("table1", "table3", "table4"):
        fam = {"table1": {}, "table3": {"family": "t", "df": 5.0}, "table4": {"family": "laplace", "rate": 2.0}}[name]
        for eps in eps_grid:
            for n in (800, 1200, 1600, 2400):
                grid.append(base.replace(scenario_id=f"{name}_eps{eps:g}_n{n}", eps=eps, n1=n // 2, n2=n // 2, **fam))
    elif name == "table2":
        for eps in eps_grid:
            for s in (1.0, 1.5, 2.0, 3.0):
                grid.append(base.replace(scenario_id=f"table2_eps{eps:g}_s{s:g}", eps=eps, sigma_m=s))
    elif name == "fig1a":
        for eps in (0.0, 0.3, 0.5):
            for n in (800, 1600, 3200):
                grid.append(base.replace(scenario_id=f"fig1a_eps{eps:g}_n{n}", eps=eps, n1=n // 2, n2=n // 2, c=0.8))
    elif name == "fig1b":
        for eps in (0.0, 0.3, 0.5):
            for s in (1.0, 1.5, 2.0, 3.0):
                grid.append(base.replace(scenario_id=f"fig1b_eps{eps:g}_s{s:g}", eps=eps, sigma_m=s))
    elif name == "fig3":
        sizes3 = (30, 40, 60) if full_scale else (10, 15, 20, 25)
        sizes4 = (20, 30) if full_scale else (6, 8)
        for d in sizes3:
            grid.append(base.replace(scenario_id=f"fig3_M3_d{d}", dims=(d,) * 3, ranks=(5,) * 3, n1=600, n2=600))
        for d in sizes4:
            grid.append(base.replace(scenario_id=f"fig3_M4_d{d}", dims=(d,) * 4, ranks=(5,) * 4, n1=600, n2=600))
    else:
        raise GridError(f"unknown preset {name!r}")
    return grid


# ------------------------------------------------------------- cross-validation

def _kfold_indices(n: int, folds: int, gen: np.random.Generator) -> list[np.ndarray]:
    if folds < 2 or folds > n:
        raise GridError(f"cannot split {n} samples into {folds} folds")
    return np.array_split(gen.permutation(n), folds)


def _holdout_scores(model: DiscriminantModel, sample: ClassSample, allow_partial: bool) -> np.ndarray:
    if sample.complete:
        return classify.scores(model, sample.X)
    if not allow_partial:
        raise classify.IncompleteTestTensor("held-out tensors have missing entries; pass allow_partial_holdout=True")
    centered = np.where(sample.S, sample.X - model.mean_mid, 0.0)
    return centered.reshape(sample.n, -1) @ model.b.ravel() + model.log_prior_ratio


def cv_rank_select(
    sample1: ClassSample,
    sample2: ClassSample,
    candidates: Sequence[Sequence[int]],
    folds: int = 5,
    rng=0,
    ridge="auto",
    tol: float = 1e-6,
    max_iter: int = 50,
    allow_partial_holdout: bool = False,
):
    """Pick the Tucker rank with the lowest held-out misclassification.

    Folds split each class separately. Ties go to the candidate with the
    fewest degrees of freedom. Returns ``(best_ranks, {ranks: error})``.
    """
    candidates = [tuple(int(r) for r in c) for c in candidates]
    if not candidates:
        raise GridError("no candidate ranks")
    shape = sample1.shape
    if len(candidates) == 1:
        return candidates[0], {candidates[0]: float("nan")}
    gen = as_generator(rng)
    splits = [_kfold_indices(s.n, folds, gen) for s in (sample1, sample2)]
    wrong = {c: 0 for c in candidates}
    total = 0
    gamma = ridge if ridge == "auto" else float(ridge)
    for f in range(folds):
        train, held = [], []
        for k, (s, split) in enumerate(zip((sample1, sample2), splits)):
            out = split[f]
            keep = np.setdiff1d(np.arange(s.n), out)
            train.append(ClassSample(s.X[keep], s.S[keep], label=k + 1))
            held.append(ClassSample(s.X[out], s.S[out], label=k + 1))
        est = estimation.discriminant_sample(train[0], train[1], gamma=gamma)
        for c in candidates:
            ref = hooi_refine(est.b_sample, TuckerRefineConfig(c, tol, max_iter))
            model = DiscriminantModel.from_estimate(est.mean1, est.mean2, ref.b_tucker, est.priors, f"tucker{c}")
            for k, h in enumerate(held):
                pred = np.where(_holdout_scores(model, h, allow_partial_holdout) >= 0, 2, 1)
                wrong[c] += int(np.sum(pred != k + 1))
        total += held[0].n + held[1].n
    errors = {c: wrong[c] / total for c in candidates}
    best = min(candidates, key=lambda c: (errors[c], degrees_of_freedom(shape, c), c))
    return best, errors


# ------------------------------------------------------------ vectorized oracle

def oracle_vectorized_lda(
    sample1: ClassSample,
    sample2: ClassSample,
    ridge: float = 0.0,
    population_sigmas: Sequence[np.ndarray] | None = None,
) -> np.ndarray:
    """Unstructured LDA direction on vectorized tensors (complete data only).

    Uses the pooled ``d x d`` covariance, or ``kron(Sigma_M, ..., Sigma_1)``
    when population mode covariances are supplied.
    """
    shape = sample1.shape
    if sample2.shape != shape:
        raise ShapeError("class shapes differ")
    d = int(np.prod(shape))
    if d > ORACLE_MAX_DIM:
        raise GridError(f"vectorized oracle limited to d <= {ORACLE_MAX_DIM}, got {d}")
    if not (sample1.complete and sample2.complete):
        raise GridError("vectorized oracle needs complete data")
    vecs = [np.stack([vec(x) for x in s.X]) for s in (sample1, sample2)]
    means = [v.mean(axis=0) for v in vecs]
    if population_sigmas is not None:
        cov = kron_modes(population_sigmas)
    else:
        centered = np.concatenate([v - mu for v, mu in zip(vecs, means)])
        cov = centered.T @ centered / centered.shape[0]
    beta = np.linalg.solve(cov + ridge * np.eye(d), means[1] - means[0])
    return beta.reshape(shape, order="F")
