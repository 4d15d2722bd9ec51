import itertools
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from qbp import kernels
from qbp.ldpc import ParityCheckMatrix
from qbp.qubo import Convention, ObjectiveWeights, QuadraticBinaryProblem, build_decoding_problem, qubo_to_ising
from qbp.sampler import (
    AnnealConfig,
    SampleSet,
    exhaustive_solve,
    export_for_external_sampler,
    import_sampleset,
    sampleset_from_json,
    simulated_anneal,
)
from qbp import _kernels_py


def random_problem(seed, n):
    rng = np.random.default_rng(seed)
    lin = {i: float(rng.normal()) for i in range(n)}
    quad = {(i, j): float(rng.normal()) for i, j in itertools.combinations(range(n), 2) if rng.random() < 0.4}
    return QuadraticBinaryProblem(n, lin, quad)


def brute(problem):
    n = problem.num_vars
    x = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8)
    e = problem.energy(x)
    return x[e <= e.min() + 1e-9], float(e.min())


def test_single_variable():
    ss = simulated_anneal(QuadraticBinaryProblem(1, {0: 1.0}, {}), AnnealConfig(20, 10))
    assert ss.assignments.tolist() == [[0]] and ss.energies.tolist() == [0.0] and ss.num_reads == 20


def test_ferromagnetic_pair():
    p = QuadraticBinaryProblem(2, {}, {(0, 1): -1.0}, convention=Convention.ISING)
    ss = simulated_anneal(p, AnnealConfig(100, 50))
    assert {tuple(r) for r in ss.assignments} <= {(-1, -1), (1, 1)}


def test_toy_code_ground_state_hit_rate():
    H = ParityCheckMatrix.from_dense([[1, 1, 1, 0], [0, 1, 1, 1]])
    # rival codewords sit behind a parity barrier of 2; a clear distance gap
    # keeps the frozen-out population on the ground state
    prob = build_decoding_problem(H, np.array([0.95, 0.1, 0.9, 0.85]), ObjectiveWeights(1.0, 1.0))
    ground, e0 = exhaustive_solve(prob)
    ss = simulated_anneal(prob, AnnealConfig(1000, 1000, seed=3))
    hits = sum(c for a, e, c in zip(ss.assignments, ss.energies, ss.counts) if abs(e - e0) < 1e-9)
    assert hits >= 990


def test_exhaustive_matches_bruteforce():
    for seed in range(20):
        p = random_problem(seed, 10)
        rows, e = exhaustive_solve(p)
        b_rows, b_e = brute(p)
        assert e == pytest.approx(b_e, abs=1e-9)
        assert {tuple(r) for r in rows} == {tuple(r) for r in b_rows}


def test_exhaustive_edge_cases():
    rows, e = exhaustive_solve(QuadraticBinaryProblem(0, {}, {}, 2.5))
    assert e == 2.5
    sat = build_decoding_problem(ParityCheckMatrix.from_dense([[1, 1, 1]]), np.full(3, 0.5), ObjectiveWeights(1.0, 0.0))
    rows, e = exhaustive_solve(sat)
    assert e == 0.0 and len(rows) == 4  # the four even-parity words
    with pytest.raises(ValueError):
        exhaustive_solve(QuadraticBinaryProblem(30, {}, {}))


def test_exhaustive_vs_annealing():
    agree = 0
    for seed in range(100):
        p = random_problem(1000 + seed, 16)
        _, e = exhaustive_solve(p)
        best = simulated_anneal(p, AnnealConfig(20, 200, seed=seed)).energies[0]
        assert best >= e - 1e-9
        agree += abs(best - e) < 1e-9
    assert agree >= 95


def test_determinism_and_ordering():
    p = random_problem(7, 12)
    a = simulated_anneal(p, AnnealConfig(50, 30, seed=9))
    b = simulated_anneal(p, AnnealConfig(50, 30, seed=9))
    assert np.array_equal(a.assignments, b.assignments) and np.array_equal(a.counts, b.counts)
    keys = [(e, tuple(r)) for e, r in zip(a.energies, a.assignments)]
    assert keys == sorted(keys)


def test_backends_bit_identical():
    p = qubo_to_ising(random_problem(5, 14))
    from qbp.sampler import _betas, _csr

    indptr, indices, data = _csr(p)
    betas = _betas(p, AnnealConfig(num_sweeps=40))
    a = kernels.anneal_reads(p.h, indptr, indices, data, betas, 11, 0, 16)
    b = _kernels_py.anneal_reads(p.h, indptr, indices, data, betas, 11, 0, 16)
    assert np.array_equal(a, b)
    q = random_problem(6, 12)
    J = np.zeros((12, 12))
    qi, qj, qv = q.couplers
    J[qi, qj] = qv
    J[qj, qi] = qv
    ea, ca = kernels.gray_ground(q.h, J, 1e-9)
    eb, cb = _kernels_py.gray_ground(q.h, J, 1e-9)
    assert ea == pytest.approx(eb) and sorted(ca.tolist()) == sorted(cb.tolist())


def test_pure_python_switch():
    env = {**os.environ, "QBP_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", "from qbp import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_config_validation():
    with pytest.raises(ValueError):
        AnnealConfig(num_reads=0)
    with pytest.raises(ValueError):
        AnnealConfig(beta_range=(2.0, 1.0))
    assert AnnealConfig(10, anneal_time_us=2.0).total_time_us == 20.0


def test_external_roundtrip(tmp_path):
    p = random_problem(3, 6)
    export_for_external_sampler(p, tmp_path / "p.json")
    assert QuadraticBinaryProblem.from_json(json.loads((tmp_path / "p.json").read_text())).allclose(p, atol=0)
    ss = simulated_anneal(p, AnnealConfig(30, 20))
    (tmp_path / "s.json").write_text(json.dumps(ss.to_json()))
    back = import_sampleset(tmp_path / "s.json", p)
    assert np.array_equal(back.assignments, ss.assignments) and np.array_equal(back.counts, ss.counts)
    bad = ss.to_json()
    bad["energies"][0] += 1.0
    with pytest.raises(ValueError, match="energy"):
        sampleset_from_json(bad, p)
    with pytest.raises(ValueError, match="missing"):
        sampleset_from_json({"samples": [{"0": 1}]}, p)
