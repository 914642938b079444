"""Time the numba kernels against their numpy fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--n 257] [--repeat 5]

Each kernel is run once to trigger compilation, then timed ``repeat``
times; the best time is reported together with a check that both
implementations return the same result.
"""
import argparse
import time

import numpy as np

from optpart import _backend, kernels


def best_of(fn, repeat):
    fn()  # warm-up (jit compile / cache load)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(n):
    rng = np.random.default_rng(0)
    mask = rng.random((n, n)) < 0.55
    u0 = rng.random((n, n))
    inner = np.zeros((n, n), dtype=bool)
    inner[1:-1, 1:-1] = True
    inv = float((n - 1) ** 2)

    # two-strip labels with a gap column, candidates along the interface
    labels = np.full((n, n), kernels.GAP, dtype=np.int64)
    labels[1:n // 2, 1:-1] = 0
    labels[n // 2 + 1:-1, 1:-1] = 1
    labels[0] = labels[-1] = labels[:, 0] = labels[:, -1] = kernels.OUTSIDE
    cand = (n // 2) * n + np.arange(1, n - 1, dtype=np.int64)
    comp = np.zeros(cand.size, dtype=np.int64)

    pos = np.linspace(0.02, 0.98, 40)
    w = np.array([2.0, 1.0, 2.0, 1.0])

    return [
        ("label_components", lambda f: f(mask, False),
         kernels.label_components, kernels.label_components_np),
        ("rb_smooth (10 sweeps)", lambda f: f(u0.copy(), inner, 0.0, inv, inv, 10, False),
         kernels.rb_smooth, kernels.rb_smooth_np),
        ("apply_transfers", lambda f: (lambda lab: (f(lab, cand, comp, cand.size, False), lab)[1])(
            labels.copy()), kernels.apply_transfers, kernels.transfer_np),
        ("multiplicity_counts", lambda f: f(np.where(labels >= 0, labels, -1), 2, 1, False),
         kernels.multiplicity_counts, kernels.multiplicity_np),
        ("exhaustive_breakpoints (k=3, 40 pos)", lambda f: f(pos, 1.0, w),
         kernels.exhaustive_breakpoints, kernels.breakpoints_np),
    ]


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=1e-12, atol=0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=257)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"backend: {_backend.BACKEND}   grid: {args.n}x{args.n}")
    if not _backend.HAVE_NUMBA:
        print("numba disabled: both columns time the numpy path")
    print(f"{'kernel':40s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speed-up':>9s}  agree")
    for name, call, fast, slow in cases(args.n):
        tf = best_of(lambda: call(fast), args.repeat)
        ts = best_of(lambda: call(slow), args.repeat)
        agree = _same(call(fast), call(slow))
        print(f"{name:40s} {tf * 1e3:12.3f} {ts * 1e3:12.3f} {ts / tf:9.1f}  {agree}")


if __name__ == "__main__":
    main()
