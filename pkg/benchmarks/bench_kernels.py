"""Compare the compiled and pure-Python kernels on the two hot loops.

    python3 benchmarks/bench_kernels.py [--paths 2000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from sabrlmm import _backend
from sabrlmm.akrs import akrs_kernel_G
from sabrlmm.mc import McConfig, simulate
from sabrlmm.model import LmmParams
from sabrlmm.tenor import MarketCurves


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    curves = MarketCurves.flat(0.013)
    params = LmmParams.build(curves.tenor, 0.0013, 0.3, 0.15, 0.05)
    cfg = McConfig(num_paths=args.paths, seed=1)
    s_grid = np.linspace(0.0, 3.0, 2000)

    names = _backend.available()
    print(f"backends available: {', '.join(names)}")
    results = {}
    for name in names:
        tg, g = best_of(lambda: akrs_kernel_G(1.5, s_grid, backend=name), args.repeat)
        small = s_grid[:21]
        ts, _ = best_of(lambda: [akrs_kernel_G(1.5, small, backend=name) for _ in range(200)], args.repeat)
        tm, ens = best_of(lambda: simulate(params, curves, cfg, backend=name), args.repeat)
        results[name] = (tg, tm, g, ens.libors, ts)
        print(f"{name:>7}: G kernel {len(s_grid)} points {tg * 1e3:8.2f} ms | "
              f"200 x 21-point batches {ts * 1e3:8.2f} ms | MC {args.paths} paths x 15y {tm:7.3f} s")
    if len(results) == 2:
        (tg_c, tm_c, g_c, l_c, ts_c), (tg_p, tm_p, g_p, l_p, ts_p) = results["cython"], results["python"]
        print(f"speed-up: G kernel x{tg_p / tg_c:.1f} (large batch), x{ts_p / ts_c:.1f} (quadrature batches), "
              f"MC x{tm_p / tm_c:.1f}")
        print(f"max |diff|: G {np.max(np.abs(g_c - g_p)):.2e}, Libors {np.max(np.abs(l_c - l_p)):.2e}")


if __name__ == "__main__":
    main()
