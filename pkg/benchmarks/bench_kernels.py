"""Compare the compiled and NumPy masked-covariance kernels.

    python benchmarks/bench_kernels.py --dims 40 40 40 --n 800 --eps 0.3
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from tensorlda.estimation import ClassSample, centered_masked, generalized_mean, mode_blocks
from tensorlda.kernels import backends


def main(argv=None) -> None:
    p = argparse.ArgumentParser()
    p.add_argument("--dims", type=int, nargs="+", default=[30, 30, 30])
    p.add_argument("--n", type=int, default=400, help="tensors per class")
    p.add_argument("--eps", type=float, default=0.3)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    gen = np.random.default_rng(args.seed)
    shape = tuple(args.dims)
    samples = [
        ClassSample(gen.standard_normal((args.n, *shape)), gen.random((args.n, *shape)) >= args.eps, label=k)
        for k in (1, 2)
    ]
    Y, S = centered_masked(samples, [generalized_mean(s) for s in samples])
    impls = backends()
    print(f"shape {shape}, n {2 * args.n}, eps {args.eps}, backends {sorted(impls)}")
    for m in range(len(shape)):
        Yb, Sb = mode_blocks(Y, m, np.float64), mode_blocks(S, m, np.uint8)
        results = {}
        for name, fn in impls.items():
            best = np.inf
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                out = fn(Yb, Sb)
                best = min(best, time.perf_counter() - t0)
            results[name] = out
            print(f"mode {m + 1}  {name:7s} {best * 1e3:9.1f} ms")
        if len(results) == 2:
            a, b = results["cython"], results["python"]
            diff = np.max(np.abs(a[0] - b[0])) / max(1.0, np.max(np.abs(b[0])))
            same = all(np.array_equal(x, y) for x, y in zip(a[1:], b[1:]))
            print(f"mode {m + 1}  max rel diff {diff:.2e}, counts identical {same}")


if __name__ == "__main__":
    main()
