"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--points 200000] [--repeat 5]

Both backends are imported directly, so the CRMORSE_PURE switch does not
matter here.  Results are checked for agreement before timing.
"""
import argparse
import time

import numpy as np

from crmorse import _kernels_py as py
from crmorse.manifold import ellipsoid_poly

try:
    from crmorse import _kernels as cy
except ImportError:  # extension not built
    cy = None


def best_of(fn, repeat):
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return min(ts)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    poly = ellipsoid_poly()
    coef, alpha, beta = poly.arrays()
    z = rng.normal(size=(args.points, 2)) + 1j * rng.normal(size=(args.points, 2))
    z *= 0.5

    # radial polynomials p(t) = rho(u_1 t, u_2 t^2) for random directions u
    u = rng.normal(size=(args.points, 2)) + 1j * rng.normal(size=(args.points, 2))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    pc = poly.substituted((u, np.array([1, 2])))

    cases = [
        ("herm_eval", lambda m: m.herm_eval(coef, alpha, beta, z)),
        ("radial_roots", lambda m: m.radial_roots(pc, 2.0, 64, 60)),
    ]
    print(f"points={args.points} repeat={args.repeat}")
    print(f"{'kernel':<14}{'numpy [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, fn in cases:
        tp = best_of(lambda: fn(py), args.repeat)
        if cy is None:
            print(f"{name:<14}{tp:>12.4f}{'n/a':>12}{'':>10}")
            continue
        a, b = fn(py), fn(cy)
        for x, y in zip(a, b):
            if not np.allclose(x, y, rtol=1e-10, atol=1e-12):
                raise SystemExit(f"{name}: backends disagree")
        tc = best_of(lambda: fn(cy), args.repeat)
        print(f"{name:<14}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
