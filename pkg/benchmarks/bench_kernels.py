"""Compare the compiled and numpy kernels on the two hot loops.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best wall time of each backend and the speedup.  Outputs of the
two backends are checked for agreement before timing.
"""

import argparse
import sys
import timeit

import numpy as np

from banachmc import _kernels_py

try:
    from banachmc import _kernels as compiled
except ImportError:
    sys.exit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")


def cases():
    rng = np.random.default_rng(0)
    for n, q in ((12, 2.0), (16, 1.5), (18, np.inf)):
        X = np.ascontiguousarray(rng.standard_normal((n, 4)))
        yield f"sign_norms n={n} q={q}", "sign_norms", (X, float(q))
    for r, k, d, N in ((1, 64, 1, 200_000), (2, 16, 2, 50_000), (3, 6, 3, 5_000)):
        pts = np.ascontiguousarray(rng.random((N, d)))
        yield f"local_basis r={r} k={k} d={d} N={N}", "local_basis", (pts, r, k)


def agree(name, a, b):
    if name == "sign_norms":
        return np.allclose(a, b, rtol=1e-12, atol=0)
    return np.array_equal(a[0], b[0]) and np.allclose(a[1], b[1], rtol=0, atol=1e-12)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'case':40s} {'cython':>10s} {'numpy':>10s} {'speedup':>8s}")
    for label, fn, fargs in cases():
        fast, slow = getattr(compiled, fn), getattr(_kernels_py, fn)
        if not agree(fn, fast(*fargs), slow(*fargs)):
            sys.exit(f"{label}: backends disagree")
        t_fast = min(timeit.repeat(lambda: fast(*fargs), number=1, repeat=args.repeat))
        t_slow = min(timeit.repeat(lambda: slow(*fargs), number=1, repeat=args.repeat))
        print(f"{label:40s} {t_fast * 1e3:8.2f}ms {t_slow * 1e3:8.2f}ms {t_slow / t_fast:7.1f}x")


if __name__ == "__main__":
    main()
