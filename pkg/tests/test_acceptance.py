"""Acceptance criteria, one test per criterion.

Each test prints a PASS/FAIL line (collected in the terminal summary) and
asserts at the stated tolerance. The full-size Gaussian cells run only with
``TENSORLDA_FULL_SCALE=1``.
"""

import time

import numpy as np
import pytest

from tensorlda import classify as cl
from tensorlda import estimation as est
from tensorlda import harness as h
from tensorlda.distributions import EllipticalParams, RngStream, TensorNormalParams
from tensorlda.estimation import ClassSample
from tensorlda.tensor import fold, kron_modes, mode_product, multi_mode_product, unfold, vec
from tensorlda.tucker import TuckerRefineConfig, hooi_refine

RESULTS: list[str] = []


def report(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def mean_tucker(cfg: h.ScenarioConfig) -> tuple[float, float, int]:
    recs = h.run_grid([cfg])
    ok = [r.misclass_tucker for r in recs if not r.failed]
    return float(np.mean(ok)), float(np.std(ok, ddof=1)), len(recs) - len(ok)


FULL = h.ScenarioConfig(dims=(40, 40, 40), ranks=(5, 5, 5), n1=400, n2=400, sigma_m=1.5, replicates=20, seed=20240)


def test_oracle_equivalence():
    t0 = time.perf_counter()
    gen = np.random.default_rng(0)
    sigmas = []
    for d in (2, 2, 2):
        A = gen.standard_normal((d, d))
        sigmas.append(A @ A.T + d * np.eye(d))
    pair = [ClassSample(gen.standard_normal((50, 2, 2, 2)) + k * gen.standard_normal((2, 2, 2)), label=k + 1) for k in range(2)]
    b = est.discriminant_sample(*pair, sigmas=sigmas).b_sample
    oracle = h.oracle_vectorized_lda(*pair, population_sigmas=sigmas)
    rel = np.linalg.norm(b - oracle) / np.linalg.norm(oracle)
    dt = time.perf_counter() - t0
    report("oracle equivalence (2,2,2)", rel <= 1e-10 and dt < 1, f"relative difference {rel:.2e}, {dt:.3f} s")


def test_exact_low_rank_fixed_point():
    t0 = time.perf_counter()
    gen = np.random.default_rng(1)
    U = [np.linalg.qr(gen.standard_normal((10, 2)))[0] for _ in range(3)]
    B = multi_mode_product(gen.standard_normal((2, 2, 2)), U)
    ref = hooi_refine(B, TuckerRefineConfig((2, 2, 2)))
    err = np.linalg.norm(ref.b_tucker - B)
    dt = time.perf_counter() - t0
    ok = ref.converged and ref.iterations_run == 1 and err <= 1e-10 and dt < 1
    report("exact Tucker fixed point (10,10,10)", ok, f"{ref.iterations_run} iteration(s), error {err:.2e}, {dt:.3f} s")


def test_bayes_risk_agreement():
    t0 = time.perf_counter()
    shape = (3, 3, 3)
    m2 = np.zeros(shape)
    m2[0, 0, 0] = 2.0
    eye = tuple(np.eye(3) for _ in shape)
    params = (EllipticalParams(TensorNormalParams(np.zeros(shape), eye)), EllipticalParams(TensorNormalParams(m2, eye)))
    model = cl.DiscriminantModel.from_estimate(np.zeros(shape), m2, m2)
    draws = 50_000  # per class, 10^5 in total
    errs, se = cl.conditional_error_mc(model, params, draws, RngStream(7))
    target = cl.bayes_risk(2.0)
    dt = time.perf_counter() - t0
    ok = abs(errs - target) <= 3 * se and abs(target - 0.15865525393145707) < 1e-12 and dt < 30
    report("Bayes risk at Delta = 2", ok, f"empirical {errs:.4f} vs {target:.4f} (3 se = {3 * se:.4f}), {dt:.1f} s")


@pytest.mark.full_scale
@pytest.mark.slow
def test_gaussian_cells_full_size():
    m0, s0, f0 = mean_tucker(FULL.replace(scenario_id="gauss_eps0"))
    m7, s7, f7 = mean_tucker(FULL.replace(scenario_id="gauss_eps07", eps=0.7))
    ok = 0 <= m0 <= 0.01 and 0.005 <= m7 <= 0.03 and f0 == f7 == 0
    report("Gaussian cells (40^3, n = 800, sigma 1.5)", ok, f"eps 0: {m0:.4f} ({s0:.3f}) in [0, 0.01]; eps 0.7: {m7:.4f} ({s7:.3f}) in [0.005, 0.03]")


@pytest.mark.slow
def test_weak_signal_cell():
    m, s, f = mean_tucker(FULL.replace(scenario_id="gauss_s1", sigma_m=1.0))
    report("weak-signal cell (40^3, sigma 1.0, n = 800, eps 0)", 0.02 <= m <= 0.07 and f == 0, f"mean {m:.4f} ({s:.3f}) in [0.02, 0.07]")


@pytest.mark.slow
def test_rate_trends():
    t0 = time.perf_counter()
    base = h.ScenarioConfig(dims=(20, 20, 20), ranks=(5, 5, 5), replicates=20, seed=5000, test_per_class=100)
    grid = [base.replace(scenario_id=f"e{e}_n{n}", eps=e, n1=n // 2, n2=n // 2) for e in (0.0, 0.3, 0.5) for n in (800, 1600, 3200)]
    recs = h.run_grid(grid)
    scaled = []
    for g in grid:
        med = np.median([r.err_b_rel for r in recs if r.scenario_id == g.scenario_id])
        scaled.append(med * (1 - g.eps) * np.sqrt(g.n_total))
    scaled = np.array(scaled)
    ref = np.exp(np.mean(np.log(scaled)))
    dev = np.abs(scaled / ref - 1)
    trend_ok = dev.max() <= 0.35

    # absolute Tucker error against sqrt(DF) on the order-3 and order-4 size sweep
    f3 = [g.replace(test_per_class=100) for g in h.preset_grid("fig3", replicates=20, seed=6000)]
    recs3 = h.run_grid(f3)
    xs, ys = [], []
    for g in f3:
        errs = []
        for r in (r for r in recs3 if r.scenario_id == g.scenario_id):
            truth = h.build_scenario(g, RngStream(r.seed).child("truth"))
            errs.append(r.err_b_rel * np.linalg.norm(truth.b))
        xs.append(g.sqrt_df)
        ys.append(np.mean(errs))
    slope, icpt = np.polyfit(xs, ys, 1)
    fit = slope * np.array(xs) + icpt
    r2 = 1 - np.sum((np.array(ys) - fit) ** 2) / np.sum((np.array(ys) - np.mean(ys)) ** 2)
    dt = time.perf_counter() - t0
    ok = trend_ok and r2 >= 0.9 and len(xs) >= 4 and dt < 15 * 60
    report(
        "rate trends (20^3)",
        ok,
        f"max deviation from 1/((1-eps) sqrt n) law {dev.max():.1%} (<= 35%); sqrt(DF) fit R^2 {r2:.3f} over {len(xs)} sizes (>= 0.9); {dt:.0f} s",
    )


@pytest.mark.slow
def test_elliptical_robustness():
    mt, st, ft = mean_tucker(FULL.replace(scenario_id="t5", family="t", df=5.0))
    ml, sl, fl = mean_tucker(FULL.replace(scenario_id="laplace2", family="laplace", rate=2.0))
    t_ok = 0.02 <= mt <= 0.05 and ft == 0
    l_ok = 0.03 <= ml <= 0.07 and fl == 0
    detail = f"t(5): {mt:.4f} ({st:.3f}) in [0.02, 0.05] {'ok' if t_ok else 'out'}; laplace(2): {ml:.4f} ({sl:.3f}) in [0.03, 0.07] {'ok' if l_ok else 'out'}"
    report("elliptical cells (40^3, t(5) and laplace(2))", t_ok and l_ok, detail)


def test_invariant_suites():
    t0 = time.perf_counter()
    cases = 100
    gen = np.random.default_rng(2024)
    counts = dict.fromkeys(["tensor identities", "complete-data degeneration", "HOOI monotone fit", "argmax scale invariance"], 0)
    for _ in range(cases):
        # tensor-core round trip, norm and Kronecker identities
        order = int(gen.integers(1, 5))
        shape = tuple(int(d) for d in gen.integers(1, 5, size=order))
        X = gen.standard_normal(shape)
        mats = [gen.standard_normal((int(gen.integers(1, 4)), d)) for d in shape]
        ok = all(np.array_equal(fold(unfold(X, m), m, shape), X) for m in range(order))
        ok &= all(np.isclose(np.linalg.norm(unfold(X, m)), np.linalg.norm(X)) for m in range(order))
        A = gen.standard_normal((3, shape[0]))
        ok &= np.allclose(unfold(mode_product(X, A, 0), 0), A @ unfold(X, 0), rtol=1e-12, atol=1e-12)
        lhs, rhs = vec(multi_mode_product(X, mats)), kron_modes(mats) @ vec(X)
        ok &= np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(rhs).max()))
        counts["tensor identities"] += bool(ok)

        # complete masks reduce to arithmetic means and pooled mode covariances
        d1, d2, n = (int(v) for v in gen.integers(2, 5, size=3))
        pair = [ClassSample(gen.standard_normal((n, d1, d2)) + k, label=k + 1) for k in range(2)]
        means = [est.generalized_mean(s) for s in pair]
        Y = np.concatenate([s.X - mu for s, mu in zip(pair, means)])
        pooled = np.einsum("ijt,ilt->jl", Y, Y) / (len(Y) * d2)
        ok = all(np.allclose(mu, s.X.mean(0), rtol=1e-12, atol=1e-13) for s, mu in zip(pair, means))
        ok &= np.allclose(est.generalized_mode_covariance(pair, means, 0), pooled, rtol=1e-12, atol=1e-13)
        counts["complete-data degeneration"] += bool(ok)

        # HOOI objective never decreases
        B = gen.standard_normal(tuple(int(d) for d in gen.integers(3, 7, size=3)))
        r = int(gen.integers(1, 3))
        hist = np.array(hooi_refine(B, TuckerRefineConfig((r, r, r), max_iter=30)).fit_history)
        counts["HOOI monotone fit"] += bool(np.all(np.diff(hist) >= -1e-12))

        # positive rescaling of b keeps predictions
        m1, m2, b = gen.standard_normal((3, 2, 3, 2))
        Z = gen.standard_normal((40, 2, 3, 2))
        lam = float(np.exp(gen.uniform(-7, 7)))
        base = cl.DiscriminantModel.from_estimate(m1, m2, b)
        scaled = cl.DiscriminantModel.from_estimate(m1, m2, lam * b)
        counts["argmax scale invariance"] += bool(np.array_equal(cl.predict(base, Z), cl.predict(scaled, Z)))
    dt = time.perf_counter() - t0
    ok = all(v == cases for v in counts.values()) and dt < 120
    report("invariant suites", ok, ", ".join(f"{k} {v}/{cases}" for k, v in counts.items()) + f"; {dt:.1f} s")
