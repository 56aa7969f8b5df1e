"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_core.py [--repeat 5]

Both backends are imported directly, so the comparison runs in one process
regardless of ``ANTVOTE_BACKEND``. Before timing, each case checks that the
two backends agree to 1e-12.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from antvote import _kernels

try:
    from antvote import _core
except ImportError:  # extension not built
    _core = None


def _pmf_case(n: int):
    rng = np.random.default_rng(n)
    counts = np.array([n // 2, n // 4, n - n // 2 - n // 4])
    probs = rng.uniform(0.05, 0.95, size=3)
    return (counts, probs)


def _gamma_case(size: int):
    rng = np.random.default_rng(size)
    return (0.7, 0.3, 0.2, 0.8, 0.56, rng.uniform(size=size), rng.uniform(size=size))


CASES = [
    ("poisson_binomial_pmf n=251", "poisson_binomial_pmf", _pmf_case(251)),
    ("poisson_binomial_pmf n=1001", "poisson_binomial_pmf", _pmf_case(1001)),
    ("poisson_binomial_pmf n=4001", "poisson_binomial_pmf", _pmf_case(4001)),
    ("equalize_gamma 1e3 pairs", "equalize_gamma", _gamma_case(1_000)),
    ("equalize_gamma 1e6 pairs", "equalize_gamma", _gamma_case(1_000_000)),
]


def _time(fn, args, repeat: int) -> float:
    timer = timeit.Timer(lambda: fn(*args))
    loops, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=loops)) / loops


def _agree(a, b) -> float:
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return max(float(np.max(np.abs(np.asarray(x) - np.asarray(y)))) for x, y in zip(a, b))


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _core is None:
        print("compiled core not built; only the fallback is available")
    print(f"{'case':32s} {'python (ms)':>12s} {'cython (ms)':>12s} {'speedup':>8s} {'max diff':>9s}")
    for label, name, case in CASES:
        py_fn = getattr(_kernels, name)
        t_py = _time(py_fn, case, args.repeat) * 1e3
        if _core is None:
            print(f"{label:32s} {t_py:12.3f} {'-':>12s} {'-':>8s} {'-':>9s}")
            continue
        cy_fn = getattr(_core, name)
        diff = _agree(py_fn(*case), cy_fn(*case))
        if diff > 1e-12:
            raise SystemExit(f"{label}: backends disagree by {diff:.2e}")
        t_cy = _time(cy_fn, case, args.repeat) * 1e3
        print(f"{label:32s} {t_py:12.3f} {t_cy:12.3f} {t_py / t_cy:7.1f}x {diff:9.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
