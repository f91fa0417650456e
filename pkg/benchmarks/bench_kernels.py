"""Time the numba and numpy kernel backends on the same matrices.

    python3 benchmarks/bench_kernels.py [--n 4096] [--shifts 64] [--repeat 3]

Reports Sturm counts, banded (coupled) inertia counts and bisection for the
lowest eigenvalues, plus one end-to-end band-bottom estimate per backend.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from warpspec import _kernels
from warpspec.eigensolver import GridPolicy, discretize, essential_bottom, make_grid
from warpspec.metric import WarpParams, arclength, build_profile
from warpspec.reduction import reduced_operator


def best_of(repeat, fn):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4096, help="uniform cells at L=160")
    ap.add_argument("--shifts", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    amap = arclength(build_profile(WarpParams(3, -1.0, -1.0)))
    grid = make_grid(1e-4, 160.0, 160.0 / args.n)
    tri = discretize(reduced_operator("I", amap, 3, 0, 0.0), grid)
    banded = discretize(reduced_operator("III", amap, 3, 1, 2.0), grid)
    shifts = np.linspace(0.0, 50.0, args.shifts)
    idx = np.arange(10)
    lo = min(tri.gershgorin_lower(), 0.0)

    cases = {
        "sturm counts": lambda be: _kernels.sturm_counts(tri.d, tri.e, shifts, backend=be),
        "band counts": lambda be: _kernels.band_counts(banded.band, shifts, backend=be),
        "bisect 10 eigenvalues": lambda be: _kernels.bisect_tridiagonal(tri.d, tri.e, lo, 50.0, idx, 1e-10,
                                                                        backend=be),
        "band bottom (3 lengths)": lambda be: essential_bottom(
            reduced_operator("I", amap, 3, 0, 0.0), policy=GridPolicy(n=args.n), backend=be),
    }
    print(f"matrix size {tri.size} (tridiagonal), {banded.size} (coupled); best of {args.repeat}")
    print(f"{'kernel':<26}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, fn in cases.items():
        fn("numba")  # compile / warm the cache outside the timing
        t_nb = best_of(args.repeat, lambda: fn("numba"))
        t_np = best_of(args.repeat, lambda: fn("numpy"))
        print(f"{name:<26}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
