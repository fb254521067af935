"""Time the compiled and numpy derailment window kernels on the same inputs.

    python3 benchmarks/bench_derailment.py [--tokens 5000] [--dim 300] [--repeat 5]

The numba path is only timed when numba is importable and not disabled via
SPEECHDISTURB_NO_NUMBA=1.
"""
import argparse
import time

import numpy as np

from speechdisturb import _accel
from speechdisturb.derailment import window_scores


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def run(tokens=5000, dim=300, k_values=(1, 2, 3, 4, 5), repeat=5, seed=0):
    rng = np.random.default_rng(seed)
    unit = rng.standard_normal((tokens, dim))
    unit /= np.linalg.norm(unit, axis=1, keepdims=True)
    valid = rng.random(tokens) > 0.05
    unit[~valid] = 0.0

    backends = ["numpy"] + (["numba"] if _accel.BACKEND == "numba" else [])
    rows = []
    for k in k_values:
        reference = window_scores(unit, valid, k, backend="numpy")
        for backend in backends:
            out = window_scores(unit, valid, k, backend=backend)  # warm-up / JIT compile
            np.testing.assert_allclose(out, reference, rtol=0, atol=1e-10, equal_nan=True)
            seconds = _best_of(lambda: window_scores(unit, valid, k, backend=backend), repeat)
            rows.append((k, backend, seconds))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tokens", type=int, default=5000)
    ap.add_argument("--dim", type=int, default=300)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rows = run(args.tokens, args.dim, repeat=args.repeat)
    print(f"tokens={args.tokens} dim={args.dim} available backend={_accel.BACKEND}")
    print(f"{'k':>2}  {'backend':<7} {'best (ms)':>10}")
    for k, backend, seconds in rows:
        print(f"{k:>2}  {backend:<7} {seconds * 1e3:>10.3f}")
    timings = {(k, b): s for k, b, s in rows}
    for k in sorted({k for k, _, _ in rows}):
        if (k, "numba") in timings:
            print(f"k={k}: numba speed-up x{timings[(k, 'numpy')] / timings[(k, 'numba')]:.1f}")


if __name__ == "__main__":
    main()
