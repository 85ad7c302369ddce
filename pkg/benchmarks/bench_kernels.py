"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--n 128] [--repeat 50]

Also times one full CSH step under each backend (the backend is fixed at
import, so each step timing runs in a subprocess with CSHLAB_NUMBA set).
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from cshlab import _kernels

STEP_SNIPPET = """
import time
from cshlab.grid import FieldGrid
from cshlab.scaling import ScalingParams
from cshlab.initdata import prepare, Profile
from cshlab.csh import csh_step, stable_dt
g = FieldGrid({n}, {n}); p = ScalingParams(0.1)
s = prepare(g, Profile(), p).csh0; dt = stable_dt(g, p, 0.25)
s = csh_step(g, s, dt)
t0 = time.perf_counter()
for _ in range({repeat}):
    s = csh_step(g, s, dt)
print((time.perf_counter() - t0) / {repeat})
"""


def inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    c = lambda *s: rng.standard_normal(s) + 1j * rng.standard_normal(s)
    psi, chi, dpsi = c(n, n), c(n, n), c(2, n, n)
    u = rng.standard_normal((2, n, n))
    rho = 1.0 + 0.2 * rng.random((n, n))
    a0 = rng.standard_normal((n, n))
    return {
        "relative_pressure": (np.abs(psi) ** 2, rho, 2.0),
        "potential_term": (psi, 2.0),
        "moments": (psi, dpsi, chi, 0.1, 1.0),
        "chi_rate": (chi, a0, c(n, n), c(n, n), 0.1, 1.0),
        "covariant": (dpsi, u, psi, 1.0),
        "modulated_density": (psi, dpsi, chi, u, rho, 0.1, 1.0, 2.0),
    }


def best_of(fn, args, repeat):
    fn(*args)  # warm-up / compile
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--steps", type=int, default=20, help="CSH steps per backend (0 skips)")
    args = ap.parse_args()
    nb, npk = _kernels.kernels("numba"), _kernels.kernels("numpy")
    print(f"grid {args.n}x{args.n}, best of {args.repeat}")
    print(f"{'kernel':20s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for name, a in inputs(args.n).items():
        t_np = best_of(npk[name], a, args.repeat)
        t_nb = best_of(nb[name], a, args.repeat)
        print(f"{name:20s} {1e3 * t_np:11.3f} {1e3 * t_nb:11.3f} {t_np / t_nb:8.2f}")
    if args.steps:
        for flag in ("0", "1"):
            env = dict(os.environ, CSHLAB_NUMBA=flag)
            out = subprocess.run(
                [sys.executable, "-c", STEP_SNIPPET.format(n=args.n, repeat=args.steps)],
                env=env, capture_output=True, text=True, check=True,
            )
            label = "numba" if flag == "1" else "numpy"
            print(f"full CSH step ({label}): {1e3 * float(out.stdout.strip()):.2f} ms")


if __name__ == "__main__":
    main()
