"""Time the compiled and NumPy direct row-sum kernels and the FFT path on the same inputs.

    python3 benchmarks/bench_kernel.py --panels 3000 --nodes 4 --repeat 3
"""
import argparse
import time

import numpy as np

from dfszeno import kernels


def make_inputs(panels, nodes, comps, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(panels, nodes, comps)) + 1j * rng.normal(size=(panels, nodes, comps))
    w = rng.uniform(0.2, 0.5, nodes)
    # decaying stationary factor, like the bath trace
    lag = np.arange(panels)[:, None, None] + rng.uniform(-0.5, 0.5, (1, nodes, nodes))
    btab = np.exp(-0.01 * lag**2 - 0.3j * lag)
    return v, w, btab


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--panels", type=int, default=3000)
    ap.add_argument("--nodes", type=int, default=4)
    ap.add_argument("--comps", type=int, default=7)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    v, w, btab = make_inputs(args.panels, args.nodes, args.comps, args.seed)
    print(f"panels={args.panels} nodes={args.nodes} comps={args.comps} threads={args.threads}")
    runs = {f"direct/{name}": (kernels.square_rows, name) for name in sorted(kernels.BACKENDS)}
    runs["spectral"] = (kernels.spectral_rows, None)
    results = {}
    for label, (fn, backend) in runs.items():
        t, out = best_of(lambda: fn(v, w, btab, args.threads, backend), args.repeat)
        results[label] = (t, out)
    t_ref, r_ref = results["direct/python"]
    scale = max(np.max(np.abs(r_ref)), 1e-300)
    for label, (t, out) in results.items():
        diff = np.max(np.abs(out - r_ref)) / scale
        print(f"{label:<15}{t:9.4f} s  {t_ref / t:8.2f}x vs NumPy direct   max rel diff {diff:.2e}")
    if "cython" not in kernels.BACKENDS:
        print("compiled kernel not built; only the NumPy paths were timed")

if __name__ == "__main__":
    main()
