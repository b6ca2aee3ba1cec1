"""Command-line entry point: ``tensorlda <subcommand> ...``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import BACKEND, __version__, classify, estimation, harness, io
from .classify import DiscriminantModel
from .distributions import RngStream
from .estimation import ClassSample
from .tucker import TuckerRefineConfig, hooi_refine


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace("x", ",").split(",") if x.strip())


def _ridge(text: str):
    return "auto" if text == "auto" else float(text)


def _load_sample(path: str, mask: str | None, label: int) -> ClassSample:
    X = io.read_tensor(path)
    S = io.read_mask(mask) if mask else None
    return ClassSample(X, S, label)


def _load_inputs(paths, shape) -> np.ndarray:
    """Each file holds one tensor of ``shape`` or a stack with a leading sample axis."""
    out = []
    for p in paths:
        Z = io.read_tensor(p)
        if Z.shape == tuple(shape):
            out.append(Z[None])
        elif Z.shape[1:] == tuple(shape):
            out.append(Z)
        else:
            raise io.FormatError(f"{p}: shape {Z.shape} does not match model shape {tuple(shape)}")
    return np.concatenate(out)


# ------------------------------------------------------------------ commands

def cmd_simulate(args) -> int:
    if args.preset:
        grid = harness.preset_grid(args.preset, full_scale=args.full_scale, replicates=args.replicates or 20, seed=args.seed)
    elif args.config:
        grid = harness.load_config(args.config)
        if args.replicates:
            grid = [g.replace(replicates=args.replicates) for g in grid]
    else:
        print("simulate needs --config or --preset", file=sys.stderr)
        return 2
    if args.memory:
        for g in grid:
            print(f"{g.scenario_id}\t{g.memory_estimate_bytes() / 2**30:.2f} GiB")
        return 0

    def progress(rec):
        if not args.quiet:
            flag = f" FAILED {rec.failed}" if rec.failed else ""
            print(f"{rec.scenario_id} rep {rec.replicate}: tucker {rec.misclass_tucker:.4f} sample {rec.misclass_sample:.4f}{flag}", file=sys.stderr)

    harness.run_grid(grid, out=args.out, summary=args.summary, jobs=args.jobs, progress=progress)
    return 0


def cmd_fit(args) -> int:
    s1 = _load_sample(args.class1, args.mask1, 1)
    s2 = _load_sample(args.class2, args.mask2, 2)
    est, ref, m_sample, m_tucker = harness.fit_models(
        s1, s2, args.ranks or s1.shape, args.ridge, args.tol, args.max_iter, args.skip_zero
    )
    out = Path(args.out)
    (m_sample if args.sample_only else m_tucker).save(out)
    est.covariances.save(out / "covariances")
    io.write_tensor(out / "b_sample.tlda", est.b_sample)
    if not args.sample_only:
        for m, U in enumerate(ref.loadings, 1):
            io.write_tensor(out / f"loading_{m}.tlda", U)
    print(f"saved {out} (n_star {est.covariances.n_star}, gamma {est.covariances.gamma:g}, hooi iterations {ref.iterations_run})")
    return 0


def cmd_classify(args) -> int:
    model = DiscriminantModel.load(args.model)
    Z = _load_inputs(args.input, model.shape)
    pred = classify.predict(model, Z)
    sys.stdout.write("".join(f"{p}\n" for p in pred))
    if args.labels:
        labels = np.loadtxt(args.labels, dtype=int, ndmin=1)
        if labels.size != pred.size:
            print(f"{labels.size} labels for {pred.size} tensors", file=sys.stderr)
            return 2
        report = classify.evaluate(model, Z, labels)
        report.save(args.report)
        print(f"misclassification rate {report.misclass_rate:.4f}", file=sys.stderr)
    return 0


def cmd_refine(args) -> int:
    b = io.read_tensor(args.input)
    ranks = args.ranks
    if args.config:
        kv = io.read_kv(args.config)
        ranks = ranks or _ints(kv["ranks"])
        args.tol = float(kv.get("tol", args.tol))
        args.max_iter = int(kv.get("max_iter", args.max_iter))
    if not ranks:
        print("refine needs --ranks", file=sys.stderr)
        return 2
    ref = hooi_refine(b, TuckerRefineConfig(ranks, args.tol, args.max_iter))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_tensor(out / "b_tucker.tlda", ref.b_tucker)
    io.write_tensor(out / "core.tlda", ref.core)
    for m, U in enumerate(ref.loadings, 1):
        io.write_tensor(out / f"loading_{m}.tlda", U)
    io.write_kv(out / "refine.txt", {
        "iterations_run": ref.iterations_run,
        "converged": ref.converged,
        "final_change": repr(ref.final_change),
        "tie_warning": ref.tie_warning,
        "degenerate": ref.degenerate,
    })
    print(f"iterations {ref.iterations_run}, converged {ref.converged}, change {ref.final_change:.3g}")
    return 0


def cmd_cv_rank(args) -> int:
    s1 = _load_sample(args.class1, args.mask1, 1)
    s2 = _load_sample(args.class2, args.mask2, 2)
    cands = [_ints(c) for c in args.candidates]
    best, errors = harness.cv_rank_select(
        s1, s2, cands, folds=args.folds, rng=RngStream(args.seed).generator, ridge=args.ridge,
        allow_partial_holdout=args.allow_partial_holdout,
    )
    for c, e in errors.items():
        print(f"{'x'.join(map(str, c))}\t{e:.4f}")
    print(f"best {'x'.join(map(str, best))}")
    return 0


def cmd_oracle_check(args) -> int:
    """Compare the structured estimator with the vectorized oracle on a planted instance."""
    shape = args.dims
    gen = RngStream(args.seed).generator
    sigmas = []
    for d in shape:
        A = gen.standard_normal((d, d))
        sigmas.append(A @ A.T / d + np.eye(d))
    D = gen.standard_normal(shape)
    X1 = gen.standard_normal((args.n, *shape))
    X2 = gen.standard_normal((args.n, *shape)) + D
    s1, s2 = ClassSample(X1, label=1), ClassSample(X2, label=2)
    est = estimation.discriminant_sample(s1, s2, sigmas=sigmas)
    oracle = harness.oracle_vectorized_lda(s1, s2, population_sigmas=sigmas)
    rel = float(np.linalg.norm(est.b_sample - oracle) / np.linalg.norm(oracle))
    ok = rel <= args.tol
    print(f"relative difference {rel:.3e} ({'PASS' if ok else 'FAIL'} at {args.tol:g})")
    return 0 if ok else 1


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tensorlda", description="Tensor LDA with missing entries.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario grid and write per-replicate CSV")
    s.add_argument("--config", help="key-value scenario file")
    s.add_argument("--preset", choices=["table1", "table2", "table3", "table4", "fig1a", "fig1b", "fig3"])
    s.add_argument("--full-scale", action="store_true", help="full-size dimensions for presets (40^3 and larger)")
    s.add_argument("--replicates", type=int)
    s.add_argument("--seed", type=lambda x: int(x, 0), default=2024, help="preset base seed")
    s.add_argument("--out", default="results.csv")
    s.add_argument("--summary", help="also write per-scenario mean/sd CSV")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--memory", action="store_true", help="print memory estimates and exit")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_simulate)

    def training_args(q):
        q.add_argument("--class1", required=True, help="stacked TLDA1 tensors, sample axis first")
        q.add_argument("--class2", required=True)
        q.add_argument("--mask1")
        q.add_argument("--mask2")
        q.add_argument("--ridge", type=_ridge, default="auto")

    f = sub.add_parser("fit", help="estimate a classifier from training tensors")
    training_args(f)
    f.add_argument("--ranks", type=_ints)
    f.add_argument("--tol", type=float, default=1e-6)
    f.add_argument("--max-iter", type=int, default=50)
    f.add_argument("--skip-zero", action="store_true", help="average covariance columns over observed pairs only")
    f.add_argument("--sample-only", action="store_true", help="save the unrefined discriminant")
    f.add_argument("--out", required=True, help="model directory")
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("classify", help="label complete tensors with a saved model")
    c.add_argument("--model", required=True)
    c.add_argument("--input", nargs="+", required=True)
    c.add_argument("--labels", help="true labels, one per line, to write an evaluation report")
    c.add_argument("--report", default="report.txt")
    c.set_defaults(func=cmd_classify)

    r = sub.add_parser("refine", help="Tucker-refine a discriminant tensor")
    r.add_argument("--input", required=True)
    r.add_argument("--config", help="key-value file with ranks, tol, max_iter")
    r.add_argument("--ranks", type=_ints)
    r.add_argument("--tol", type=float, default=1e-6)
    r.add_argument("--max-iter", type=int, default=50)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_refine)

    v = sub.add_parser("cv-rank", help="choose Tucker ranks by cross-validation")
    training_args(v)
    v.add_argument("--candidates", nargs="+", required=True, help="e.g. 2,2,2 3,3,3")
    v.add_argument("--folds", type=int, default=5)
    v.add_argument("--seed", type=lambda x: int(x, 0), default=0)
    v.add_argument("--allow-partial-holdout", action="store_true")
    v.set_defaults(func=cmd_cv_rank)

    o = sub.add_parser("oracle-check", help="structured estimator vs vectorized LDA")
    o.add_argument("--dims", type=_ints, default=(2, 2, 2))
    o.add_argument("--n", type=int, default=50)
    o.add_argument("--seed", type=lambda x: int(x, 0), default=0)
    o.add_argument("--tol", type=float, default=1e-10)
    o.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
