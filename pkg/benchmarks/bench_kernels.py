"""Time the compiled kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py --n 100 200 --repeat 5
"""
import argparse
import timeit

import numpy as np

from drlmoa import _pykernels

try:
    from drlmoa import _ckernels
except ImportError:
    _ckernels = None


def dist(rng, n):
    xy = rng.random((n, 2))
    return np.ascontiguousarray(np.linalg.norm(xy[:, None] - xy[None], axis=-1))


def cases(rng, n):
    D = dist(rng, n)
    tour = rng.permutation(n).astype(np.int64)
    F = np.ascontiguousarray(rng.random((n, 2)))
    return {
        "two_opt_matrix": lambda m: m.two_opt_matrix(D, tour, 1_000_000),
        "nondominated_mask": lambda m: m.nondominated_mask(F),
        "nondominated_ranks": lambda m: m.nondominated_ranks(F),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[50, 100, 200])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    print(f"{'kernel':<20} {'n':>5} " + " ".join(f"{b:>12}" for b, _ in backends) + "    speedup")
    for n in args.n:
        for name, fn in cases(rng, n).items():
            times = [min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) for _, mod in backends]
            speed = f"{times[0] / times[1]:8.1f}x" if len(times) == 2 else "       -"
            print(f"{name:<20} {n:>5} " + " ".join(f"{t * 1e3:10.2f}ms" for t in times) + "   " + speed)
    if _ckernels is None:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
