"""Compare the compiled and numpy trajectory kernels.

    python benchmarks/bench_kernels.py [--trials N] [--t-max T] [--repeat R]

Both backends produce identical outage times; the script checks that before
reporting timings.
"""

import argparse
import time

import numpy as np

from skruin import _backend
from skruin._pykernels import SCHEME_DETERMINISTIC, SCHEME_RANDOM

GX, GY = 100.0, 10.0


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200_000)
    ap.add_argument("--t-max", type=int, default=30)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args(argv)

    cases = [
        ("outage deterministic", lambda b: _backend.outage_times(
            7, args.trials, [5.0, 10.0, 20.0, 50.0], args.t_max, SCHEME_DETERMINISTIC, 0.0, GX, GY, GX,
            threads=args.threads, backend=b)),
        ("outage random p=0.1", lambda b: _backend.outage_times(
            7, args.trials, [20.0], args.t_max, SCHEME_RANDOM, 0.1, GX, GY, GX,
            threads=args.threads, backend=b)),
        ("hitting time b0=20", lambda b: _backend.hitting_times(
            7, args.trials, 20.0, GX, GY, 10_000, threads=args.threads, backend=b)),
    ]
    backends = _backend.available_backends()
    print(f"trials={args.trials} t_max={args.t_max} threads={args.threads or _backend.default_threads()}")
    print(f"{'case':<24}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in cases:
        times, outs = [], []
        for b in backends:
            t, out = _time(lambda: fn(b), args.repeat)
            times.append(t)
            outs.append(out)
        if len(outs) > 1 and not np.array_equal(outs[0], outs[1]):
            raise SystemExit(f"{name}: backends disagree")
        row = f"{name:<24}" + "".join(f"{t:>11.3f}s" for t in times)
        if len(times) > 1:
            row += f"{times[1] / times[0]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
