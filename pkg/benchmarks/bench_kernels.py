"""Time the compiled stepping kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]

Each case runs the same trajectory on both backends, checks that the results
agree, and reports the best wall time, the cost per site-step, and the speed-up.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from qwalk import _backend
from qwalk.disorder import DisorderSpec
from qwalk.integrator import IntegrationConfig, run_trajectory
from qwalk.lattice import centered_window, init_delta
from qwalk.qubit import QubitParams, _sample_plan, qubit_schedule, qubit_trajectories


def chain_case(kind, W, sites, steps, dt=0.005):
    lo, hi = centered_window(sites)
    spec = DisorderSpec(kind, W, 0.05, seed=1)
    cfg = IntegrationConfig(dt=dt, t_max=steps * dt, sample_times=[0.0, steps * dt])

    def run(backend):
        return run_trajectory(init_delta(0, (lo, hi)), spec, cfg, backend=backend).final.amplitudes

    return run, sites * steps


def qubit_case(W, count, t_max):
    p = QubitParams(W=W, t_max=t_max, seed=1)
    dt, dtu = qubit_schedule(p)
    bounds, _ = _sample_plan(t_max, dtu, 10)

    def run(backend):
        return qubit_trajectories(p, 0, count, dt, dtu, bounds, backend=backend)[0]

    return run, 2 * count * int(round(t_max / dt))


def best_time(fn, backend, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn(backend)
        best = min(best, time.perf_counter() - start)
    return best, result


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = parser.parse_args(argv)
    if _backend.compiled_kernels is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    scale = 0.2 if args.quick else 1.0
    steps = int(2000 * scale)
    cases = {
        "clean   N=128": chain_case("clean", 0.0, 128, steps),
        "static  N=128": chain_case("static", 2.0, 128, steps),
        "static  N=1024": chain_case("static", 2.0, 1024, steps),
        "white   N=256": chain_case("white", 2.0, 256, steps),
        "sin     N=256": chain_case("sin", 1.0, 256, steps),
        "qubit   x200": qubit_case(2.0, 200, 5.0 * scale),
    }
    print(f"{'case':16s} {'compiled':>12s} {'python':>12s} {'ns/site-step':>14s} {'speed-up':>9s}")
    for name, (fn, work) in cases.items():
        t_c, a = best_time(fn, "compiled", args.repeat)
        t_p, b = best_time(fn, "python", max(1, args.repeat - 1))
        if not np.allclose(a, b, rtol=0, atol=1e-11):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:16s} {t_c:11.4f}s {t_p:11.4f}s {1e9 * t_c / work:8.1f} /{1e9 * t_p / work:5.0f} "
              f"{t_p / t_c:8.1f}x")


if __name__ == "__main__":
    main()
