import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbp.ldpc import (
    AlistError,
    CodeSpec,
    ParityCheckMatrix,
    RankDeficientError,
    all_codewords,
    construct_regular_code,
    encode,
    generator,
    girth,
    load_alist,
    save_alist,
    syndrome,
    to_systematic,
)


def brute_girth(dense):
    """Shortest cycle in the Tanner graph via BFS from every edge removal."""
    import networkx as nx

    M, N = dense.shape
    g = nx.Graph()
    g.add_edges_from((("c", m), ("b", n)) for m in range(M) for n in range(N) if dense[m, n])
    best = float("inf")
    for u, v in list(g.edges):
        g.remove_edge(u, v)
        try:
            best = min(best, nx.shortest_path_length(g, u, v) + 1)
        except nx.NetworkXNoPath:
            pass
        g.add_edge(u, v)
    return best


dense_matrices = st.integers(1, 6).flatmap(
    lambda m: st.integers(2, 9).flatmap(
        lambda n: st.lists(st.lists(st.integers(0, 1), min_size=n, max_size=n), min_size=m, max_size=m)
    )
)


def test_peg_420_has_280_checks():
    H = construct_regular_code(CodeSpec(420))
    assert H.M == 280 and H.is_regular(2, 3)


def test_n3_shape():
    H = construct_regular_code(CodeSpec(3))
    assert H.M == 2
    assert list(H.row_weights) == [3, 3] and list(H.col_weights) == [2, 2, 2]


def test_construction_deterministic():
    a = construct_regular_code(CodeSpec(96, seed=7))
    b = construct_regular_code(CodeSpec(96, seed=7))
    assert a == b
    assert a.is_regular(2, 3)


def test_bad_spec_rejected():
    with pytest.raises(ValueError):
        CodeSpec(10, 2, 3)  # 20 edges not divisible by 3


def test_girth_examples(path_code):
    assert girth(ParityCheckMatrix.from_dense([[1, 1], [1, 1]])) == 4
    assert girth(path_code) == float("inf")


def test_girth_random_matches_bruteforce():
    rng = np.random.default_rng(5)
    for _ in range(5):
        d = (rng.random((20, 30)) < 0.12).astype(np.uint8)
        assert girth(ParityCheckMatrix.from_dense(d)) == brute_girth(d)


def test_systematic_examples(path_code):
    P, perm = to_systematic(path_code)
    assert P.tolist() == [[1], [1]]
    assert list(perm) == [0, 1, 2]
    already = ParityCheckMatrix.from_dense([[1, 0, 1, 0], [1, 1, 0, 1]])
    P2, perm2 = to_systematic(already)
    assert list(perm2) == [0, 1, 2, 3]
    assert P2.tolist() == [[1, 0], [1, 1]]


def test_rank_deficient_names_rows():
    H = ParityCheckMatrix.from_dense([[1, 1, 0, 0], [0, 1, 1, 0], [1, 0, 1, 0]])
    with pytest.raises(RankDeficientError) as e:
        to_systematic(H)
    assert e.value.dependent_rows == (2,)


def test_generator_examples(path_code):
    G = generator(path_code)
    assert G.G.tolist() == [[1, 1, 1]]
    assert syndrome(np.array([1, 1, 0]), path_code).tolist() == [0, 1]
    assert syndrome(np.zeros(3, dtype=int), path_code).tolist() == [0, 0]


def test_systematic_recompose(code12):
    P, perm = to_systematic(ParityCheckMatrix.from_dense(code12.dense[:-1]))
    Hp = code12.dense[:-1][:, perm]
    Mr = P.shape[0]
    assert np.array_equal(np.hstack([P, np.eye(Mr, dtype=np.uint8)]) % 2, _row_reduce(Hp))


def _row_reduce(A):
    """Reduced row echelon form with pivots on the trailing identity block."""
    A = A.copy() % 2
    M, N = A.shape
    for r in range(M):
        c = N - M + r
        piv = next(i for i in range(r, M) if A[i, c])
        A[[r, piv]] = A[[piv, r]]
        for i in range(M):
            if i != r and A[i, c]:
                A[i] ^= A[r]
    return A


def test_codewords_exhaustive(code12):
    G = generator(code12)
    words = all_codewords(G)
    assert len(words) == 2**G.K
    assert not syndrome(words, code12).any()
    assert not encode(np.zeros(G.K, dtype=int), G).any()
    for i in range(G.K):
        e = np.zeros(G.K, dtype=int)
        e[i] = 1
        x = encode(e, G)
        assert np.array_equal(x[G.message_positions], e)


def test_alist_roundtrip_and_fixture(tmp_path, path_code):
    p = tmp_path / "c.alist"
    p.write_text("3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 2\n2 3\n")
    assert load_alist(p) == path_code
    save_alist(path_code, tmp_path / "d.alist")
    assert load_alist(tmp_path / "d.alist") == path_code
    (tmp_path / "t.alist").write_text("3 2\n2 2\n1 2 1\n")
    with pytest.raises(AlistError):
        load_alist(tmp_path / "t.alist")


@settings(max_examples=60, deadline=None)
@given(dense_matrices)
def test_encode_gives_zero_syndrome(rows):
    H = ParityCheckMatrix.from_dense(rows)
    G = generator(H)
    if G.K == 0:
        return
    rng = np.random.default_rng(len(rows))
    u = rng.integers(0, 2, (5, G.K))
    for x in (encode(v, G) for v in u):
        assert not syndrome(x, H).any()
    assert G.K == H.N - (H.M - len(G.redundant_rows))


@settings(max_examples=60, deadline=None)
@given(dense_matrices)
def test_matrix_views_consistent(rows):
    H = ParityCheckMatrix.from_dense(rows)
    entries = {(m, n) for m, r in enumerate(H.rows) for n in r}
    assert entries == {(m, n) for n, c in enumerate(H.cols) for m in c}
    assert entries == {tuple(e) for e in np.argwhere(H.dense)}
    assert len(entries) == H.num_edges


@settings(max_examples=40, deadline=None)
@given(dense_matrices)
def test_alist_roundtrip_property(tmp_path_factory, rows):
    H = ParityCheckMatrix.from_dense(rows)
    p = tmp_path_factory.mktemp("al") / "h.alist"
    save_alist(H, p)
    assert load_alist(p) == H


def test_linear_code_closed_under_xor(code12):
    words = all_codewords(generator(code12))
    s = {tuple(w) for w in words}
    for a, b in itertools.islice(itertools.combinations(words, 2), 200):
        assert tuple(a ^ b) in s
