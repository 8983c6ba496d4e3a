"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Inputs are the ones the package actually feeds the kernels: Legendre tables
on the dimension-3 working grid, jet algebra on its nodes, and Wulff support
evaluation against a polytope with a few thousand vertices. Also times one
end-to-end step (building a dimension-3 body and its even spectrum) with
each backend in a fresh interpreter.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from bmk import _kernels_py
from bmk.sphere import working_grid

try:
    from bmk import _kernels
except ImportError:
    _kernels = None

END_TO_END = """
import time
t = time.perf_counter()
from bmk import kernels
from bmk.catalog import Catalog
from bmk.spectrum import assemble_pencil, solve_spectrum
K = Catalog().body("smoothed_cube", 3)
solve_spectrum(assemble_pencil(K, "even"), 4)
print(kernels.BACKEND, time.perf_counter() - t)
"""


def cases():
    rng = np.random.default_rng(0)
    grid = working_grid(3)
    L = grid.band_limit
    x = np.cos(grid.theta.reshape(grid.shape)[:, 0])
    N = grid.size
    value = rng.uniform(1.0, 2.0, N)
    hess = rng.normal(scale=0.1, size=(N, 2, 2))
    hess = 0.5 * (hess + hess.transpose(0, 2, 1))
    verts = rng.normal(size=(3000, 3))
    return {
        "legendre_table": lambda k: k.legendre_table(L, x),
        "jet_algebra": lambda k: k.jet_algebra(value, hess),
        "support_max": lambda k: k.support_max(grid.nodes, verts),
    }


def best(fn, repeat):
    number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-end-to-end", action="store_true")
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`")
        return 1
    print(f"{'kernel':<16}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}{'max |diff|':>14}")
    for name, call in cases().items():
        tp = best(lambda: call(_kernels_py), args.repeat)
        tc = best(lambda: call(_kernels), args.repeat)
        diff = max(float(np.max(np.abs(a - b)))
                   for a, b in zip(_as_tuple(call(_kernels_py)), _as_tuple(call(_kernels))))
        print(f"{name:<16}{1e3 * tp:>14.3f}{1e3 * tc:>14.3f}{tp / tc:>10.1f}{diff:>14.2e}")
    if not args.no_end_to_end:
        print("\nend to end (dimension-3 smoothed cube: body + even spectrum, fresh interpreter)")
        for pure in ("1", "0"):
            env = dict(os.environ, BMK_PURE_PYTHON=pure)
            out = subprocess.run([sys.executable, "-c", END_TO_END], env=env,
                                 capture_output=True, text=True, check=True).stdout.split()
            print(f"  {out[0]:<8}{float(out[1]):8.2f} s")
    return 0


def _as_tuple(r):
    return r if isinstance(r, tuple) else (r,)


if __name__ == "__main__":
    sys.exit(main())
