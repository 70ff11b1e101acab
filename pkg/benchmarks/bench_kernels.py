"""Compare the compiled polynomial kernels with the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py``.  Each kernel is timed on
inputs of the size met in practice (degree 8 to 24) and the speedup of the
compiled version is reported together with the largest relative difference
between the two results.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from optomech import _kernels_py as pure

try:
    from optomech import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def cases(degree, rng):
    roots = rng.standard_normal(degree) + 1j * rng.standard_normal(degree)
    coeffs = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
    x = np.linspace(-20.0, 20.0, 256).astype(complex)
    return {
        "poly_from_roots": lambda k: k.poly_from_roots(roots, 1.0 + 0j),
        "horner": lambda k: k.horner(coeffs, x),
        "taylor_shift": lambda k: k.taylor_shift(coeffs, roots[0], 4),
        "simple_residues": lambda k: k.simple_residues(coeffs[:degree // 2], 1.0 + 0j, roots),
        "product_eval": lambda k: k.product_eval(roots, 1.0 + 0j, x),
    }


def best_time(fn, number):
    return min(timeit.repeat(fn, number=number, repeat=5)) / number


PIPELINE = """
import time, warnings
warnings.simplefilter("ignore")
from optomech import BACKEND
from optomech.control import optimal_controller
from optomech.estimator import solve_point
from optomech.model import ReducedParams
rp = ReducedParams(gamma=1.5, delta=-1.0, omega_q=0.5, omega_f=0.1, gamma_m=1e-4, eta=0.9)
t0 = time.perf_counter()
for _ in range({reps}):
    ps = solve_point(rp)
    optimal_controller(rp, ps.wiener, ps.cond, ps.transfers)
print(BACKEND, (time.perf_counter() - t0) / {reps})
"""


def pipeline(reps):
    """Time one controlled point per backend, each in a fresh interpreter."""
    for pure_flag in ("0", "1"):
        env = dict(os.environ, OPTOMECH_PURE_PYTHON=pure_flag)
        out = subprocess.run([sys.executable, "-c", PIPELINE.format(reps=reps)], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        print(f"pipeline point ({out[0]:>6}): {float(out[1]) * 1e3:8.1f} ms")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--degrees", type=int, nargs="+", default=[8, 16, 24])
    ap.add_argument("--number", type=int, default=200)
    ap.add_argument("--pipeline", type=int, default=0, metavar="REPS",
                    help="also time REPS full controlled points per backend")
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled extension not available; build it with "
              "`pip install -e . --no-build-isolation`")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16} {'deg':>4} {'python [us]':>12} {'cython [us]':>12} "
          f"{'speedup':>8} {'max rel diff':>13}")
    for deg in args.degrees:
        for name, call in cases(deg, rng).items():
            tp = best_time(lambda: call(pure), args.number)
            tc = best_time(lambda: call(compiled), args.number)
            a, b = np.asarray(call(pure)), np.asarray(call(compiled))
            diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
            print(f"{name:<16} {deg:>4} {tp * 1e6:>12.2f} {tc * 1e6:>12.2f} "
                  f"{tp / tc:>8.1f} {diff:>13.2e}")
    if args.pipeline:
        pipeline(args.pipeline)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
