"""Compare the compiled kernels with their numpy fallbacks.

Run ``python3 benchmarks/bench_kernels.py [--repeat R] [--scale S]``.  Each
row reports the best-of-R wall time of both implementations and the maximum
relative difference of their outputs.
"""

import argparse
import timeit

import numpy as np

from gradedpsi import _kernels_py

try:
    from gradedpsi import _kernels as compiled
except ImportError:  # pragma: no cover
    compiled = None


def _cases(rng, scale):
    n_eig, n_nodes = 2000 * scale, 800
    eigs = (rng.uniform(1, 1e3, (n_eig // 8, 8)) + 0j)
    nodes = np.exp(rng.uniform(-1, 9, n_nodes)) * np.exp(2.8j)
    coeffs = rng.standard_normal(n_nodes) + 1j * rng.standard_normal(n_nodes)
    yield "contour_sum_diag", (eigs, nodes, coeffs)

    steps, size = 400, 2000 * scale
    f = np.exp(-rng.uniform(0, 0.1, (steps, size))) + 0j
    g = rng.standard_normal((steps, size)) + 0j
    v0 = rng.standard_normal(size) + 0j
    yield "linear_recurrence", (f, g, v0)

    P, N = 4000 * scale, 8
    w = rng.uniform(size=P)
    u = rng.standard_normal((P, N, N)) + 1j * rng.standard_normal((P, N, N))
    r = rng.uniform(size=(P, N))
    yield "weighted_sq_sum", (w, u, r)


def _time(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=int, default=1)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled extension not built; only the fallback is available")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'cython [ms]':>14}{'python [ms]':>14}{'speedup':>10}{'max rel diff':>15}")
    for name, data in _cases(rng, args.scale):
        fc, fp = getattr(compiled, name), getattr(_kernels_py, name)
        tc, tp = _time(fc, data, args.repeat), _time(fp, data, args.repeat)
        a, b = np.asarray(fc(*data)), np.asarray(fp(*data))
        diff = float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
        print(f"{name:<20}{1e3 * tc:>14.3f}{1e3 * tp:>14.3f}{tp / tc:>10.1f}{diff:>15.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
