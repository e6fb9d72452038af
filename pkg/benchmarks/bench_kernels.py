"""Benchmark the numba kernels against the pure-numpy fallback.

Run twice to compare the two paths:

    python benchmarks/bench_kernels.py
    CARNOT_NO_NUMBA=1 python benchmarks/bench_kernels.py

The kernel path is chosen at import time from the CARNOT_NO_NUMBA
environment variable, so each run reports one backend.
"""

import time

import numpy as np

from carnot import _kernels
from carnot.algebra import preset_group
from carnot.metrics import koranyi


def bench(label, fn, *args, repeat=5):
    fn(*args)  # warm-up (numba compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    best = min(times)
    print(f"{label:35s} {best * 1e3:9.3f} ms")
    return best


def main():
    backend = "numba" if _kernels.USE_NUMBA else "numpy"
    print(f"backend: {backend}")

    g = preset_group("engel")
    rng = np.random.default_rng(0)
    n = 200000
    a = rng.standard_normal((n, g.q))
    b = rng.standard_normal((n, g.q))

    bench(f"bracket_batch engel n={n}", _kernels.bracket_batch, g._sparse, a, b)
    bench(f"norm_sq_layers engel n={n}", _kernels.norm_sq_layers, a,
          g.layer_starts, g.layer_ends)
    bench(f"multiply engel n={n}", g.multiply, a, b)

    h = preset_group("heisenberg1")
    d = koranyi(h)
    x = rng.standard_normal((n, h.q))
    bench(f"koranyi norm n={n}", d.norm, x)


if __name__ == "__main__":
    main()
