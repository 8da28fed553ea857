"""Throughput comparison of the Cython and pure-Python range-coder kernels.

Usage: python3 benchmarks/coder_benchmark.py [n_symbols]
"""

import sys
import time

import numpy as np

from croi import entropy
from croi.coder import _range_py

try:
    from croi.coder import _range_cy
except ImportError:
    _range_cy = None


def run(impl, syms, idx, tabs, repeats=3):
    best_enc = best_dec = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        payload = impl.encode_symbols(syms, idx, tabs.cdfs, tabs.cdf_sizes,
                                      tabs.offsets)
        best_enc = min(best_enc, time.perf_counter() - t0)
        t0 = time.perf_counter()
        out = impl.decode_symbols(payload, len(syms), idx, tabs.cdfs,
                                  tabs.cdf_sizes, tabs.offsets)
        best_dec = min(best_dec, time.perf_counter() - t0)
    assert np.array_equal(out, syms)
    return best_enc, best_dec, len(payload)


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
    rng = np.random.default_rng(0)
    scales = rng.uniform(0.05, 8.0, size=n)
    idx = entropy.scale_indexes(scales)
    tabs = entropy.gaussian_tables()
    syms = np.round(rng.normal(0, scales)).astype(np.int32)

    print(f"{n} symbols, mixed scales")
    py_enc, py_dec, size = run(_range_py, syms, idx, tabs)
    print(f"python  encode {py_enc * 1e3:8.1f} ms   decode {py_dec * 1e3:8.1f} ms"
          f"   ({size} bytes)")
    if _range_cy is None:
        print("cython  (extension not built)")
        return
    cy_enc, cy_dec, cy_size = run(_range_cy, syms, idx, tabs)
    assert cy_size == size
    print(f"cython  encode {cy_enc * 1e3:8.1f} ms   decode {cy_dec * 1e3:8.1f} ms")
    print(f"speedup encode {py_enc / cy_enc:6.1f}x   decode {py_dec / cy_dec:6.1f}x")


if __name__ == "__main__":
    main()
