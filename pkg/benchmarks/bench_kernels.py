#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Run from the repo root:

    python3 benchmarks/bench_kernels.py

The numba path is what ``snndse`` uses by default; setting SNNDSE_NO_NUMBA=1
switches the package to the numpy path measured here. Both paths are
bit-identical; this script also asserts that on the benchmark inputs.
"""

import time

import numpy as np

from snndse import kernels


def timeit(fn, *args, repeat=5):
    fn(*args)  # warm-up (triggers JIT on the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    if not kernels.NUMBA_ENABLED:
        raise SystemExit(
            "numba path is disabled (SNNDSE_NO_NUMBA set or numba missing); "
            "nothing to compare"
        )
    rng = np.random.default_rng(7)

    print(f"{'kernel':<22}{'numpy':>12}{'numba':>12}{'speedup':>10}")

    pixels = rng.integers(0, 256, size=784, dtype=np.uint8)
    t_np, a = timeit(kernels.encode_bits_numpy, pixels, 200, 42)
    t_nb, b = timeit(kernels.encode_bits_numba, pixels, 200, 42)
    assert np.array_equal(a, b)
    print(f"{'encode_bits':<22}{t_np * 1e3:>10.2f}ms{t_nb * 1e3:>10.2f}ms{t_np / t_nb:>9.1f}x")

    weights = rng.normal(0, 0.3, size=(1024, 1024)).astype(np.float32)
    addrs = np.sort(rng.choice(1024, size=300, replace=False)).astype(np.int64)
    t_np, a = timeit(kernels.fc_accumulate_numpy, weights, addrs)
    t_nb, b = timeit(kernels.fc_accumulate_numba, weights, addrs)
    assert np.array_equal(a, b)
    print(f"{'fc_accumulate':<22}{t_np * 1e3:>10.2f}ms{t_nb * 1e3:>10.2f}ms{t_np / t_nb:>9.1f}x")

    filters = rng.normal(0, 0.3, size=(32, 2, 3, 3)).astype(np.float32)
    addrs = np.sort(rng.choice(2 * 64 * 64, size=800, replace=False)).astype(np.int64)
    t_np, a = timeit(kernels.conv_accumulate_numpy, filters, addrs, 64, 64)
    t_nb, b = timeit(kernels.conv_accumulate_numba, filters, addrs, 64, 64)
    assert np.array_equal(a, b)
    print(f"{'conv_accumulate':<22}{t_np * 1e3:>10.2f}ms{t_nb * 1e3:>10.2f}ms{t_np / t_nb:>9.1f}x")

    words = rng.integers(0, 2**63, size=(16,), dtype=np.uint64)
    t_np, a = timeit(kernels.set_bit_addresses_numpy, words, 1000)
    t_nb, b = timeit(kernels.set_bit_addresses_numba, words, 1000)
    assert np.array_equal(a, b)
    print(f"{'set_bit_addresses':<22}{t_np * 1e6:>10.2f}us{t_nb * 1e6:>10.2f}us{t_np / t_nb:>9.1f}x")

    mem = rng.normal(0, 0.5, size=65536).astype(np.float32)
    acc = rng.normal(0, 0.5, size=65536).astype(np.float32)
    bias = rng.normal(0, 0.1, size=65536).astype(np.float32)
    t_np, a = timeit(kernels.lif_update_numpy, mem.copy(), acc, bias, 0.9, 1.0, True)
    t_nb, b = timeit(kernels.lif_update_numba, mem.copy(), acc, bias, 0.9, 1.0, True)
    assert np.array_equal(a, b)
    print(f"{'lif_update':<22}{t_np * 1e6:>10.2f}us{t_nb * 1e6:>10.2f}us{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
