"""Time the compiled kernels against the NumPy fallback on identical inputs.

    python benchmarks/bench_kernels.py [--reads 100] [--sweeps 300] [--repeat 3]

Outputs of both implementations are compared before timing is reported.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from qbp import _kernels_py
from qbp.ldpc import CodeSpec, construct_regular_code
from qbp.qubo import ObjectiveWeights, build_decoding_problem, ising_to_qubo, qubo_to_ising
from qbp.sampler import AnnealConfig, _betas, _csr

try:
    from qbp import _kernels as _compiled
except ImportError:
    _compiled = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def anneal_case(n_bits, reads, sweeps):
    H = construct_regular_code(CodeSpec(n_bits, seed=7))
    p = np.random.default_rng(1).random(H.N)
    ising = qubo_to_ising(build_decoding_problem(H, p, ObjectiveWeights(1.0, 0.3)))
    indptr, indices, data = _csr(ising)
    betas = np.ascontiguousarray(_betas(ising, AnnealConfig(num_reads=reads, num_sweeps=sweeps)))
    h = np.ascontiguousarray(ising.h, dtype=np.float64)
    return ising.num_vars, (h, indptr, indices, data, betas, 5, 0, reads)


def ground_case(n_bits):
    H = construct_regular_code(CodeSpec(n_bits, seed=3))
    p = np.random.default_rng(2).random(H.N)
    q = ising_to_qubo(build_decoding_problem(H, p, ObjectiveWeights(1.0, 0.3)))
    n = q.num_vars
    J = np.zeros((n, n))
    qi, qj, qv = q.couplers
    J[qi, qj] = qv
    J[qj, qi] = qv
    return n, (np.ascontiguousarray(q.h), J, 1e-9)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reads", type=int, default=100)
    ap.add_argument("--sweeps", type=int, default=300)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _compiled is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")

    print(f"{'kernel':<28}{'vars':>6}{'compiled s':>12}{'python s':>12}{'speedup':>10}")
    for n_bits in (24, 96):
        n, a = anneal_case(n_bits, args.reads, args.sweeps)
        tc, oc = best_of(lambda: _compiled.anneal_reads(*a), args.repeat)
        tp, op = best_of(lambda: _kernels_py.anneal_reads(*a), 1)
        assert np.array_equal(np.asarray(oc), op), "anneal outputs differ"
        print(f"{f'anneal_reads N={n_bits}':<28}{n:>6}{tc:>12.4f}{tp:>12.4f}{tp / tc:>9.1f}x")
    for n_bits in (9, 12):
        n, a = ground_case(n_bits)
        tc, (ec, cc) = best_of(lambda: _compiled.gray_ground(*a), args.repeat)
        tp, (ep, cp) = best_of(lambda: _kernels_py.gray_ground(*a), 1)
        assert abs(ec - ep) < 1e-9 and np.array_equal(np.sort(cc), np.sort(cp)), "ground states differ"
        print(f"{f'gray_ground N={n_bits}':<28}{n:>6}{tc:>12.4f}{tp:>12.4f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
