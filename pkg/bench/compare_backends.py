"""Benchmark the numba kernels against the pure-numpy fallback.

Both backends consume identical random streams, so beyond timing this
also asserts that their integer outputs (loss counts, trial counts)
agree exactly.  Run from the repository root:

    python3 bench/compare_backends.py [--mc 20000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from xcovsel.kernels import numpy_impl

try:
    from xcovsel.kernels import numba_impl
except ImportError:
    numba_impl = None

CASES = [
    # (label, p_t, p_u, q_u, n, sampler_id, method_id)
    ("small wishart/thres", 2, 5, 0, 2, 0, 0),
    ("small asym/thres", 2, 5, 0, 2, 2, 0),
    ("medium wishart/svd", 5, 35, 35, 2, 0, 1),
    ("large data/thres", 10, 590, 190, 100, 1, 0),
    ("large data/svd", 50, 550, 150, 12, 1, 1),
]


def run(impl, case, mc: int, seed: int = 0):
    _, p_t, p_u, q_u, n, sampler_id, method_id = case
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    out = impl.mc_batch(rng, p_t, p_u, q_u, n - 1, sampler_id, method_id, mc)
    return out, time.perf_counter() - t0


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mc", type=int, default=20000, help="trials per small case")
    args = parser.parse_args()

    if numba_impl is None:
        raise SystemExit("numba is not importable; nothing to compare")

    # Trigger jit compilation outside the timed region.
    warm = np.random.default_rng(0)
    numba_impl.mc_batch(warm, 2, 1, 1, 1, 0, 0, 2)
    numba_impl.mc_batch(warm, 2, 1, 1, 1, 1, 1, 2)
    numba_impl.mc_batch(warm, 2, 1, 1, 1, 2, 0, 2)

    print(f"{'case':<22} {'mc':>7} {'numpy':>9} {'numba':>9} {'speedup':>8}  outputs")
    for case in CASES:
        mc = args.mc if case[1] < 10 else max(20, args.mc // 100)
        out_np, t_np = run(numpy_impl, case, mc)
        out_nb, t_nb = run(numba_impl, case, mc)
        match = "equal" if out_np == out_nb else f"MISMATCH {out_np} vs {out_nb}"
        print(
            f"{case[0]:<22} {mc:>7} {t_np:>8.3f}s {t_nb:>8.3f}s "
            f"{t_np / t_nb:>7.1f}x  {match}"
        )


if __name__ == "__main__":
    main()
