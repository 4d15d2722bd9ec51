import itertools
from dataclasses import replace

import numpy as np
import pytest

from qbp.chimera import (
    ChimeraEmbedding,
    ChimeraGraph,
    CodeLayout,
    PlacementError,
    build_hardware_problem,
    capacity,
    embed_code,
    extend_to_physical,
    level1_embed,
    level2_embed,
    neighbors,
    place_checks,
    schema_type,
    unembed,
    validate_layout,
    verify_embedding,
)
from qbp.chimera.schemas import idle_left, idle_right
from qbp.ldpc import ParityCheckMatrix
from qbp.qubo import ObjectiveWeights, build_decoding_problem, qubo_to_ising


def k4_realized(chains, graph):
    for v, c in chains.items():
        sub = graph.to_networkx().subgraph(c)
        assert len(c) == 1 or __import__("networkx").is_connected(sub), v
    for u, v in itertools.combinations(chains, 2):
        if not any(graph.has_coupler(a, b) for a in chains[u] for b in chains[v]):
            return False
    return True


def test_graph_counts():
    g = ChimeraGraph(16)
    assert g.num_qubits == 2048
    # 16 per cell, plus 4 per vertical and 4 per horizontal adjacency
    assert len(g.couplers) == 16 * 256 + 4 * 2 * 16 * 15
    assert g.qubit(1, 0, 3) == 11 and g.coords(11) == (1, 0, 3)
    assert g.has_coupler(g.qubit(0, 0, 0), g.qubit(0, 1, 0))
    assert g.has_coupler(g.qubit(0, 0, 4), g.qubit(1, 0, 4))
    assert not g.has_coupler(g.qubit(0, 0, 0), g.qubit(1, 0, 0))
    assert not g.has_coupler(g.qubit(0, 0, 0), g.qubit(0, 0, 1))


def test_neighbors():
    assert set(neighbors((0, 0), 16)) == {(1, 0), (0, 1)}
    assert len(neighbors((2, 3), 16)) == 4
    assert len(neighbors((15, 15), 16)) == 2


def test_schema_types_partition_grid():
    types = {schema_type((x, y)) for x in range(2) for y in range(2)}
    assert types == {"A", "B", "C", "D"}
    assert (idle_left((0, 0)), idle_right((0, 0))) == (1, 6)


def test_reference_type_a_layout():
    g = ChimeraGraph(1)
    chains = level1_embed(["a", "b", "c", "e"], (0, 0), g, schema="A")
    assert chains == {"a": (0,), "b": (2, 4), "e": (3, 5), "c": (7,)}
    used = {q for c in chains.values() for q in c}
    assert set(range(8)) - used == {1, 6}


@pytest.mark.parametrize("cell", [(0, 0), (1, 0), (0, 1), (1, 1)])
def test_every_schema_realizes_k4(cell):
    g = ChimeraGraph(2)
    chains = level1_embed([0, 1, 2, 3], cell, g)
    assert k4_realized(chains, g)
    used = {g.coords(q)[2] for c in chains.values() for q in c}
    idle = set(range(8)) - used
    assert idle == {idle_left(cell), idle_right(cell)}


def test_level2_ensemble_respects_bounds():
    g = ChimeraGraph(3)
    chains = level2_embed([0, 1, 2, 3], (0, 0), g, [(0, 0), (2, 1), (1, 2)])
    assert k4_realized(chains, g)
    assert all(3 <= len(c) <= 9 for c in chains.values())
    idle = {g.qubit(x, y, idle_left((x, y))) for x in range(3) for y in range(3)}
    idle |= {g.qubit(x, y, idle_right((x, y))) for x in range(3) for y in range(3)}
    assert {q for c in chains.values() for q in c} <= idle


def test_level2_rejects_occupied():
    g = ChimeraGraph(3)
    with pytest.raises(ValueError):
        level2_embed([0, 1, 2, 3], (0, 0), g, [None, None, None], occupied={g.qubit(0, 0, 1)})


def test_one_check_toy():
    H = ParityCheckMatrix.from_dense([[1, 1, 1]])
    g = ChimeraGraph(1)
    prob = build_decoding_problem(H, np.full(3, 0.5), ObjectiveWeights(1.0, 0.0))
    emb, hw = embed_code(prob, H, g)
    assert emb.layout.level1 == {0: (0, 0)}
    assert emb.num_qubits_used == 6
    assert verify_embedding(emb, prob, g).ok


def test_capacity():
    assert capacity(10**4) == 2083 and capacity(2048) == 426


def test_native_layout_valid(native420, grid16):
    H, layout = native420
    assert H.is_regular(2, 3) and H.M == 280
    validate_layout(H, grid16, layout)
    assert (len(layout.level1), len(layout.level2)) == (256, 24)


def test_placement_recovers_layout(native420, grid16):
    H, _ = native420
    layout = place_checks(H, grid16)
    validate_layout(H, grid16, layout)


def test_257_checks_need_level2(grid16):
    from qbp.chimera import construct_qgem_code

    H, layout = construct_qgem_code(16, n_level2=1, allow_dangling=True)
    assert H.M == 257 and len(layout.level2) >= 1


def test_placement_failure_lists_checks():
    H = ParityCheckMatrix.from_dense([[1, 1, 1]] * 3)  # all checks share bits
    with pytest.raises(PlacementError) as e:
        place_checks(H, ChimeraGraph(2))
    assert e.value.checks


@pytest.fixture(scope="module")
def embedded30(native30):
    H, layout = native30
    g = ChimeraGraph(8)
    p = np.random.default_rng(0).random(H.N)
    prob = build_decoding_problem(H, p, ObjectiveWeights(1.0, 0.7))
    emb, hw = embed_code(prob, H, g, 8.0, layout)
    return H, g, prob, emb, hw


def test_embedding_report(embedded30):
    H, g, prob, emb, hw = embedded30
    r = verify_embedding(emb, prob, g)
    assert r.ok and r.max_chain[1] <= 4 and r.max_chain[2] <= 9
    assert np.abs(hw.problem.couplers[2]).max() == 1.0


def test_verifier_catches_broken_chain(embedded30):
    H, g, prob, emb, _ = embedded30
    v = next(v for v, c in emb.chains.items() if len(c) >= 3)
    c = emb.chains[v]
    bad = replace(emb, chains={**emb.chains, v: (c[0], c[-1] + 10**6)})
    assert not verify_embedding(bad, prob, g).ok
    u = next(u for u in emb.chains if u != v)
    shared = replace(emb, chains={**emb.chains, u: emb.chains[u] + (c[0],)})
    rep = verify_embedding(shared, prob, g)
    assert any("shared" in s for s in rep.violations)


def test_chain_uniform_energy_identity(embedded30, rng):
    H, g, prob, emb, hw = embedded30
    ising = qubo_to_ising(prob)
    s = rng.choice([-1, 1], (50, prob.num_vars)).astype(np.int8)
    phys = extend_to_physical(s, emb, hw.qubits)
    lhs = hw.problem.energy(phys)
    rhs = ising.energy(s) / hw.jferro + hw.chain_constant
    assert np.allclose(lhs, rhs, atol=1e-9)
    back, broken = unembed(phys, emb, qubit_order=hw.qubits)
    assert np.array_equal(back, s) and not np.any(broken)


def test_embedding_json_roundtrip(embedded30):
    _, _, _, emb, hw = embedded30
    again = ChimeraEmbedding.from_json(emb.to_json())
    assert again.chains == emb.chains and again.layout == emb.layout
    assert hw.to_json()["topology"] == {"chimera": 8}


def test_unembed_majority_and_ties():
    lay = CodeLayout(1, {})
    emb = ChimeraEmbedding(1, {0: (0, 4, 1), 1: (2, 5)}, 8.0, {0: 1, 1: 1}, {}, lay, {0: 0.3, 1: -0.2})
    order = [0, 1, 2, 4, 5]
    spins, broken = unembed(np.array([1, -1, 1, 1, -1]), emb, qubit_order=order)
    assert spins.tolist() == [1, 1] and broken == 2
    emb2 = replace(emb, tie_bias={1: 0.5})
    assert unembed(np.array([1, -1, 1, 1, -1]), emb2, qubit_order=order)[0].tolist() == [1, -1]
    spins, broken = unembed({0: 1, 1: 1, 4: 1, 2: -1, 5: -1}, emb)
    assert spins.tolist() == [1, -1] and broken == 0


def test_hardware_problem_rejects_weak_chain(embedded30):
    _, g, prob, emb, _ = embedded30
    with pytest.raises(ValueError):
        build_hardware_problem(prob, replace(emb, jferro=0.1), g)


def test_420_level2_chains_in_bounds(native420, grid16):
    H, layout = native420
    prob = build_decoding_problem(H, np.full(H.N, 0.5), ObjectiveWeights(1.0, 0.0))
    emb, _ = embed_code(prob, H, grid16, 8.0, layout)
    lengths = [len(c) for v, c in emb.chains.items() if emb.level[v] == 2]
    assert lengths and 3 <= min(lengths) and max(lengths) <= 9
