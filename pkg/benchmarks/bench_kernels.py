"""Time the numba and numpy Euler-Maruyama kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--paths 256] [--steps 4096] [--repeat 5]

The numba column is empty when numba is unavailable or disabled through
SRAMFLIP_BACKEND=numpy.  1D outputs are also checked for exact agreement.
"""

import argparse
import math
import time

import numpy as np

from sramflip import _kernels as K


def ou_inputs(paths, steps, seed):
    tau, sigma_vv, delta = 1.0, 1.0, 3.0
    grid = np.linspace(-10.0, delta, 8193)
    dt = tau / 200
    amp = sigma_vv * math.sqrt(2 / tau) * math.sqrt(dt)
    z = np.random.default_rng(seed).standard_normal((paths, steps))
    args = (-grid / tau, grid[0], 1.0 / (grid[1] - grid[0]), dt, amp, delta)
    return z, args


def cell_inputs(paths, steps, seed):
    vdd, vm, vs, rc = 0.2, 0.1, 0.03, 0.5e-9
    dt = rc / 20
    amp = 28.78 * math.sqrt(dt) * 40
    z = np.random.default_rng(seed).standard_normal((paths, steps, 2))
    return z, (vdd / 2, vm, vs, 0.042, -0.042, 1 / rc, dt, amp)


def best_of(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_1d(kernel, z, args, repeat):
    def run():
        v = np.zeros(z.shape[0])
        hit = kernel(v, z, *args)
        return v, hit
    return best_of(run, repeat)


def bench_2d(kernel, z, args, repeat):
    def run():
        lo = np.full(z.shape[0], 0.0003)
        hi = np.full(z.shape[0], 0.1997)
        hit = kernel(lo, hi, z, *args)
        return lo, hi, hit
    return best_of(run, repeat)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=256)
    ap.add_argument("--steps", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()

    have_numba = K.BACKEND == "numba"
    steps = a.paths * a.steps
    print(f"backend={K.BACKEND} paths={a.paths} steps/path={a.steps}")
    print(f"{'kernel':<8}{'numpy ns/step':>15}{'numba ns/step':>15}{'speedup':>10}")

    for name, make, bench, np_kernel, nb_name in (
            ("1d", ou_inputs, bench_1d, K.advance_1d_numpy, "advance_1d_numba"),
            ("2d", cell_inputs, bench_2d, K.advance_2d_numpy, "advance_2d_numba")):
        z, args = make(a.paths, a.steps, a.seed)
        t_np, out_np = bench(np_kernel, z, args, a.repeat)
        row = f"{name:<8}{t_np / steps * 1e9:>15.1f}"
        if have_numba:
            nb_kernel = getattr(K, nb_name)
            bench(nb_kernel, z[:2], args, 1)  # compile outside the timing
            t_nb, out_nb = bench(nb_kernel, z, args, a.repeat)
            row += f"{t_nb / steps * 1e9:>15.1f}{t_np / t_nb:>9.1f}x"
            if name == "1d":
                same = all(np.array_equal(x, y) for x, y in zip(out_np, out_nb))
                row += "  identical" if same else "  MISMATCH"
        print(row)


if __name__ == "__main__":
    main()
