"""Compiled vs pure-Python kernels on the annealing and integer-determinant hot loops.

Run ``python benchmarks/bench_kernels.py``. Both backends consume the same
random streams, so the script also checks that they agree bit for bit.
"""
import argparse
import time

import numpy as np

from dimwitness import _pykernels
from dimwitness.classical import BinaryAnnealSchedule
from dimwitness.optimizer import AngleParametrization

try:
    from dimwitness import _kernels
except ImportError:
    _kernels = None


def bench_engine(mod, params, angles, proposals, uniforms, sweeps):
    blocks, angle_block, eff_first, eff_nfree, fixed = params.layout()
    eng = mod.AnnealEngine(params.dim, params.k, blocks, angle_block, eff_first, eff_nfree, fixed, angles)
    t = time.perf_counter()
    eng.run_stage(3e-3, 0.5, sweeps, proposals, uniforms)
    return time.perf_counter() - t, eng.best, int(eng.evaluations)


def bench_binary(mod, k, seed, steps):
    rng = np.random.default_rng(seed)
    n = k + 1
    bits = rng.integers(0, 2, (k, n)).astype(np.int8)
    flips = rng.integers(0, k * n, steps).astype(np.int64)
    uniforms = rng.random(steps)
    cur = abs(int(mod.bareiss_det(np.vstack([bits, np.ones(n, np.int8)]).astype(np.int64))))
    t = time.perf_counter()
    cur, best = mod.binary_anneal_stage(bits, cur, BinaryAnnealSchedule().t0 * 100, flips, uniforms, bits.copy(), cur)
    return time.perf_counter() - t, best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sweeps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not built; nothing to compare")
        return
    cases = [(2, 2, "complex", 1), (3, 4, "complex", 1), (4, 4, "complex", 2), (5, 5, "complex", 2)]
    print(f"{'case':24s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s}  identical")
    for d, k, field, rank in cases:
        params = AngleParametrization.uniform(d, k, field, rank)
        rng = np.random.default_rng(args.seed)
        angles = rng.random(params.n_angles) * 2 * np.pi
        steps = args.sweeps * params.n_angles
        proposals, uniforms = rng.random(steps), rng.random(steps)
        tp, bp, ep = bench_engine(_pykernels, params, angles, proposals, uniforms, args.sweeps)
        tc, bc, ec = bench_engine(_kernels, params, angles, proposals, uniforms, args.sweeps)
        name = f"anneal d={d} k={k} r={rank}"
        print(f"{name:24s} {tp:10.4f} {tc:11.5f} {tp / tc:8.1f}  {bp == bc and ep == ec}")
    for k in (6, 9, 12):
        steps = 20000
        tp, bp = bench_binary(_pykernels, k, args.seed, steps)
        tc, bc = bench_binary(_kernels, k, args.seed, steps)
        name = f"binary k={k}"
        print(f"{name:24s} {tp:10.4f} {tc:11.5f} {tp / tc:8.1f}  {bp == bc}")


if __name__ == "__main__":
    main()
