"""Time the compiled RK4 kernel against the NumPy fallback.

The workload is the full-oscillation Ca pi-pulse (about 1000 carrier
periods) at a chosen number of steps per period.

    python3 benchmarks/bench_kernels.py --steps-per-period 40 --repeat 3
"""

import argparse
import math
import time

import numpy as np

from qsteer import _rk4_py
from qsteer.liouville import commutator_superop, vec
from qsteer.propagator import HBAR

try:
    from qsteer import _rk4
except ImportError:
    _rk4 = None

CARRIER = 4.5e15
RABI = 2.4e-29 * 1e7 / HBAR


def problem(steps_per_period):
    g0 = commutator_superop(np.diag([0.0, CARRIER]).astype(complex))
    g1 = commutator_superop(-np.array([[0, 1], [1, 0]], dtype=complex))
    x0 = vec(np.diag([0.75, 0.25]).astype(complex))
    duration = math.pi / RABI
    nsteps = int(math.ceil(duration * CARRIER / (2 * math.pi) * steps_per_period))
    return g0, g1, x0, duration / nsteps, nsteps


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps-per-period", type=float, default=40)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    g0, g1, x0, dt, nsteps = problem(args.steps_per_period)
    record = np.array([0, nsteps], dtype=np.int64)
    run_py = lambda: _rk4_py.rk4_modulated(g0, g1, RABI, CARRIER, 0.0, x0, dt, nsteps, record)
    print(f"{nsteps} RK4 steps on a 4x4 generator")
    t_py, out_py = best_time(run_py, args.repeat)
    print(f"python  {t_py:8.3f} s  {nsteps / t_py:12.0f} steps/s")
    if _rk4 is None:
        print("cython  extension not built")
        return
    run_cy = lambda: _rk4.rk4_modulated(g0, g1, RABI, CARRIER, 0.0, x0, dt, nsteps, record)
    t_cy, out_cy = best_time(run_cy, args.repeat)
    print(f"cython  {t_cy:8.3f} s  {nsteps / t_cy:12.0f} steps/s")
    print(f"speedup {t_py / t_cy:8.1f}x  max |diff| {np.max(np.abs(out_py - out_cy)):.1e}")


if __name__ == "__main__":
    main()
