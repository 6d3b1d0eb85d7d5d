"""Time each hot kernel under the numba and the pure-numpy backend.

    python3 benchmarks/bench_kernels.py [--length 20000] [--repeat 5]

Both backends are importable side by side (``kernels.BACKENDS``), so one
process measures both; the numba build is called once first to exclude
compilation from the timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mssddpg import kernels
from mssddpg.market_data import SynthSpec, synth_series


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--length", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    s = synth_series(SynthSpec("random-walk", args.length, 0))
    mh, ml, _, _ = kernels.merge_inclusions_np(s.high, s.low, True)
    kinds = kernels.detect_shape_kinds_np(mh, ml)
    centers = np.flatnonzero(kinds).astype(np.int64)
    skind = kinds[centers].astype(np.int64)
    pivots = np.where(skind == 1, mh[centers], ml[centers])
    close = np.ascontiguousarray(s.close)
    equity = close / close[0]

    cases = {
        "merge_inclusions": (s.high, s.low, True),
        "detect_shape_kinds": (mh, ml),
        "link_strokes": (centers, skind, pivots, 5),
        "turtle_signals": (close, 20, 10),
        "running_drawdown": (equity,),
    }
    print(f"bars={args.length} repeat={args.repeat} (best-of, milliseconds)")
    print(f"{'kernel':<20} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, call_args in cases.items():
        nb = kernels.BACKENDS["numba"][name]
        npy = kernels.BACKENDS["numpy"][name]
        nb(*call_args)  # compile
        t_np = best_of(npy, call_args, args.repeat)
        t_nb = best_of(nb, call_args, args.repeat)
        print(f"{name:<20} {t_np * 1e3:>10.3f} {t_nb * 1e3:>10.3f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
