"""Time the compiled and pure-Python radial integrators on the same workload.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 3] [--runs 200]

Both backends integrate the plus family of a tanh-ramp sink from a fan of
start radii; the script checks that they agree on every fate and end point
before reporting timings.
"""
import argparse
import sys
import time

import numpy as np

from horizonlab import kernels
from horizonlab.geodesics import integrate_radial
from horizonlab.metric import acoustic_to_radial
from horizonlab.profiles import TimeProfile


def workload(backend, metric, radii, window):
    return [integrate_radial(metric, "plus", r0, window[0], "forward", window, record=False,
                             rtol=1e-10, atol=1e-12, backend=backend) for r0 in radii]


def best_of(repeat, fn):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--runs", type=int, default=200, help="start radii per backend")
    args = parser.parse_args(argv)

    if kernels.compiled_integrate_acoustic is None:
        print("compiled kernel not available; build with `pip install -e . --no-build-isolation`")
        return 1
    metric = acoustic_to_radial(TimeProfile.tanh_ramp(-2.0, 0.5))
    window = (-10.0, 10.0)
    radii = np.linspace(0.1, 6.0, args.runs)

    t_c, runs_c = best_of(args.repeat, lambda: workload("compiled", metric, radii, window))
    t_p, runs_p = best_of(args.repeat, lambda: workload("python", metric, radii, window))

    worst = max(abs(a.fate_x0 - b.fate_x0) + abs(a.fate_r - b.fate_r) for a, b in zip(runs_c, runs_p))
    same = all(a.fate == b.fate for a, b in zip(runs_c, runs_p))
    print(f"runs per backend     {args.runs}")
    print(f"compiled  best time  {t_c:8.4f} s   ({t_c / args.runs * 1e3:.3f} ms/run)")
    print(f"python    best time  {t_p:8.4f} s   ({t_p / args.runs * 1e3:.3f} ms/run)")
    print(f"speed-up             {t_p / t_c:8.1f}x")
    print(f"fates identical      {same}")
    print(f"max end-point diff   {worst:.3e}")
    return 0 if same and worst < 1e-9 else 2


if __name__ == "__main__":
    sys.exit(main())
