"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--res 128 256] [--repeat 3]

Both variants are always importable in one process, so the environment
variable that selects the backend for the library does not matter here.
"""
import argparse
import time

import numpy as np

from doublebubble import grid, kernels, search
from doublebubble.tripod import BASIS


def _noisy_tripod(res, seed=0):
    rng = np.random.default_rng(seed)
    x = BASIS @ np.array([0.3, -0.2])
    lab = grid.make_tripod_grid(x, 6.0, res).labels.astype(np.int64) - 1
    r, c = kernels.boundary_sites(lab)
    flip = rng.random(r.size) < 0.2
    lab[r[flip], c[flip]] = rng.integers(0, 3, flip.sum())
    return lab, rng


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(res, repeat):
    lab, rng = _noisy_tripod(res)
    fld = search._Field(6.0, res)
    grad = kernels.label_gradients(lab)
    target = np.array([0.5, 0.3, 0.2])
    rows, cols = kernels.boundary_sites(lab)
    u = rng.random(2 * rows.size)

    def sweep(fn):
        def run():
            L = lab.copy()
            g = grad.copy()
            fn(L, g, fld.g, fld.dg, rows, cols, u, fld.phi_edge, fld.mass, fld.dens,
               target, fld.measures(L), 2.0, 0.3 * fld.h)
        return run

    cases = {
        "perimeter": (lambda: kernels.perimeter_numba(lab, grad, fld.phi_edge, fld.mass),
                      lambda: kernels.perimeter_numpy(lab, grad, fld.phi_edge, fld.mass)),
        "anneal_sweep": (sweep(kernels.anneal_sweep_numba), sweep(kernels.anneal_sweep_numpy)),
    }
    for name, (fast, slow) in cases.items():
        fast()  # compile
        tn = best_of(fast, repeat)
        tp = best_of(slow, repeat)
        print(f"{name:13s} res={res:4d} sites={rows.size:6d}  numba {tn * 1e3:9.2f} ms"
              f"  numpy {tp * 1e3:9.2f} ms  speedup {tp / tn:7.1f}x")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--res", type=int, nargs="+", default=[128, 256])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    for res in args.res:
        bench(res, args.repeat)


if __name__ == "__main__":
    main()
