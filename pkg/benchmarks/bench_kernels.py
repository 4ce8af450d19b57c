"""Compare the numba and numpy kernels on identical inputs.

    python benchmarks/bench_kernels.py [--samples 1048576] [--n 3] [--repeat 5]

Both kernels are called directly, so the JSCC_LAB_NO_JIT flag has no effect
here. Results are checked for agreement before timing is reported.
"""

import argparse
import statistics
import time

import numpy as np

from jscc_lab._jit import HAVE_NUMBA
from jscc_lab.kernels import quantize_batch_jit, quantize_batch_np, simulate_chunk_jit, simulate_chunk_np
from jscc_lab.model import SchemeParams


def timeit(func, *args, repeat=5):
    func(*args)  # warm up, includes compilation for the jit path
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        func(*args)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--samples", type=int, default=1 << 20)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    p = SchemeParams.from_snr(args.n, 1e4, beta=10.0, sigma_e2=1 / 12)
    rng = np.random.default_rng(0)
    s = rng.standard_normal(args.samples)
    z = rng.standard_normal((args.n, args.samples))
    sim_args = (s, z, p.beta, p.n, p.grid_step, p.gain_e, p.lmmse_coef)

    np.testing.assert_array_equal(quantize_batch_np(s, p.beta, args.n - 1)[0], quantize_batch_jit(s, p.beta, args.n - 1)[0])
    np.testing.assert_allclose(simulate_chunk_np(*sim_args), simulate_chunk_jit(*sim_args), rtol=1e-12)

    rows = [
        ("quantize_batch", timeit(quantize_batch_np, s, p.beta, args.n - 1, repeat=args.repeat),
         timeit(quantize_batch_jit, s, p.beta, args.n - 1, repeat=args.repeat)),
        ("simulate_chunk", timeit(simulate_chunk_np, *sim_args, repeat=args.repeat),
         timeit(simulate_chunk_jit, *sim_args, repeat=args.repeat)),
    ]
    print(f"samples={args.samples} n={args.n} (median of {args.repeat})")
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, t_np, t_jit in rows:
        print(f"{name:<16}{t_np * 1e3:>12.2f}{t_jit * 1e3:>12.2f}{t_np / t_jit:>9.1f}x")


if __name__ == "__main__":
    main()
