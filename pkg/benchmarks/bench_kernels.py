"""Time the compiled kernels against their pure-Python fallbacks.

Usage::

    python benchmarks/bench_kernels.py --length 65536 --repeat 3

Each kernel runs on the same inputs under both backends; outputs are
compared for equality before any timing is reported.
"""

import argparse
import sys
import time

import numpy as np

from ergolab import _fallback
from ergolab._backend import compiled
from ergolab.models import golden_conjugate, symmetric_flip


def _inputs(n: int, seed: int):
    rng = np.random.default_rng(seed)
    flip = symmetric_flip(0.1)
    word = flip.sample(n, seed)
    cum = np.ascontiguousarray(np.cumsum(flip.transition, axis=1))
    init = np.ascontiguousarray(np.cumsum(flip.stationary))
    uniforms = rng.random(n)
    a = golden_conjugate()
    x = int(rng.integers(0, 1 << 63)) << 65
    mask = (1 << 64) - 1
    bp_hi = np.array([0, 1 << 63], dtype=np.uint64)
    bp_lo = np.zeros(2, dtype=np.uint64)
    symbols = np.array([0, 1], dtype=np.uint8)
    return {
        "markov_walk": (cum, init, uniforms),
        "rotation_codes": (x >> 64, x & mask, a >> 64, a & mask, bp_hi, bp_lo, symbols, n),
        "lz78_phrase_count": (word, 2),
        "match_lengths": (word, 2, n - n // 4),
    }


def _best(fn, args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--length", type=int, default=1 << 16, help="input length (default 65536)")
    parser.add_argument("--repeat", type=int, default=3, help="timing repetitions, best kept")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    if compiled is None:
        print("compiled extension not available; build with `pip install -e . --no-build-isolation`")
        return 1
    inputs = _inputs(args.length, args.seed)
    print(f"{'kernel':<20} {'compiled (s)':>13} {'python (s)':>11} {'speedup':>8}")
    for name, call_args in inputs.items():
        fast, slow = getattr(compiled, name), getattr(_fallback, name)
        if not np.array_equal(np.asarray(fast(*call_args)), np.asarray(slow(*call_args))):
            print(f"{name}: outputs differ between backends", file=sys.stderr)
            return 2
        tc = _best(fast, call_args, args.repeat)
        tp = _best(slow, call_args, args.repeat)
        print(f"{name:<20} {tc:>13.5f} {tp:>11.5f} {tp / max(tc, 1e-9):>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
