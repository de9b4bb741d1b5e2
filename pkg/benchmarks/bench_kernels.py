"""Compare the compiled and pure-numpy kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from multiloc import _pykernels

try:
    from multiloc import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None


def cases():
    rng = np.random.default_rng(0)
    coords = np.array([[i, j] for i in range(-50, 51) for j in range(-50, 51)], dtype=np.int64)
    a = rng.integers(-10, 11, size=(200, 3, 2)).astype(np.int64)
    b = rng.integers(-10, 11, size=(400, 3, 2)).astype(np.int64)
    big = rng.integers(-10, 11, size=(20000, 4, 2)).astype(np.int64)
    return {
        "site_uniforms (10201 sites)": lambda m: m.site_uniforms(7, 3, coords),
        "hausdorff_matrix (200 x 400, n=3)": lambda m: m.hausdorff_matrix(a, b),
        "splitting_widths (20000 configs, n=4)": lambda m: m.splitting_widths(big),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels is not None else [])
    print(f"{'kernel':42s}" + "".join(f"{name:>12s}" for name, _ in backends) + f"{'speedup':>10s}")
    for label, fn in cases().items():
        times = []
        for _, mod in backends:
            fn(mod)
            times.append(min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)))
        speed = f"{times[0] / times[1]:9.1f}x" if len(times) == 2 else ""
        print(f"{label:42s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times) + f"{speed:>10s}")
        if len(backends) == 2:
            assert np.array_equal(fn(backends[0][1]), fn(backends[1][1])), label


if __name__ == "__main__":
    main()
