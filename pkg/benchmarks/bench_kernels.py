"""Time the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel and problem size with the best-of-N time for each
backend and the speedup. Outputs of the two backends are checked for equality
before timing.
"""

import argparse
import timeit

import numpy as np

from blockdemix import _kernels_py

try:
    from blockdemix import _kernels as _ext
except ImportError:
    _ext = None


def _cases(rng):
    for n, b, s in [(4096, 16, 160), (4096, 1, 160), (65536, 16, 656), (65536, 1, 656)]:
        v = rng.standard_normal(n)
        yield f"block_project n={n} b={b} s={s}", "block_project", (v, s // b, b)
    for q, k, size in [(256, 6, 307), (1024, 4, 307), (256, 32, 307)]:
        freqs = np.linspace(-3, 3, size)
        order = np.argsort(np.abs(freqs), kind="stable")
        D = rng.uniform(-20, 20, (q, k))
        U = np.sin(rng.uniform(-2, 2, q)[:, None] * D)
        yield f"tone_argmax q={q} k={k} grid={size}", "tone_argmax", (U, D, freqs, order)
        yield f"tone_scores q={q} k={k} grid={size}", "tone_scores", (U, D, freqs)


def _best(fn, args, repeat):
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ext is None:
        raise SystemExit("compiled extension not built; run `pip install -e .` first")
    rng = np.random.default_rng(0)
    print(f"{'case':<42}{'cython':>12}{'python':>12}{'speedup':>10}")
    for label, name, call_args in _cases(rng):
        fast, slow = getattr(_ext, name), getattr(_kernels_py, name)
        a, b = fast(*call_args), slow(*call_args)
        for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            np.testing.assert_allclose(x, y, rtol=1e-10, atol=1e-12)
        tf, ts = _best(fast, call_args, args.repeat), _best(slow, call_args, args.repeat)
        print(f"{label:<42}{tf * 1e3:>10.3f}ms{ts * 1e3:>10.3f}ms{ts / tf:>9.1f}x")


if __name__ == "__main__":
    main()
