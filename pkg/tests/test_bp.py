import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbp import bp
from qbp.channel import modulate_bpsk
from qbp.ldpc import ParityCheckMatrix, encode, generator


def single_check(values):
    H = ParityCheckMatrix.from_dense([[1] * len(values)])
    s = bp.init_state(np.zeros(len(values)), H)
    s = bp.LlrState(H, s.prior, np.asarray(values, dtype=float), s.check_to_bit, 0)
    return bp.check_update(s).check_to_bit


def test_init_llr():
    assert bp.init_llr([0.0], 1.0)[0] == 0.0
    assert bp.init_llr([1.0], 1.0)[0] == -2.0
    with pytest.raises(ValueError):
        bp.init_llr([1.0], 0.0)


@given(st.lists(st.floats(-50, 50, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-200), min_size=1, max_size=20), st.floats(0.01, 10))
def test_llr_sign_opposes_y(y, s2):
    llr = bp.init_llr(y, s2)
    assert np.all(np.sign(llr) == -np.sign(y))


def test_check_update_examples():
    assert single_check([2.0, -3.0, 1.5]).tolist() == [-1.5, 1.5, -2.0]
    out = single_check([0.0, -3.0, 1.5])
    assert out[1] == 0 and out[2] == 0
    assert single_check([0.7, -4.0]).tolist() == [-4.0, 0.7]


def test_bit_update_example():
    H = ParityCheckMatrix.from_dense([[1, 1], [1, 1]])
    s = bp.init_state(np.array([1.0, 0.0]), H)
    chk, bit = H.edges
    c2b = np.zeros(len(chk))
    c2b[(chk == 0) & (bit == 0)] = 0.5
    c2b[(chk == 1) & (bit == 0)] = -2.0
    s = bp.bit_update(bp.LlrState(H, s.prior, s.bit_to_check, c2b, 1))
    m0 = s.bit_to_check[(chk == 0) & (bit == 0)][0]
    m1 = s.bit_to_check[(chk == 1) & (bit == 0)][0]
    assert (m0, m1) == (-1.0, 1.5)
    # degree-1 bit passes its prior through
    H1 = ParityCheckMatrix.from_dense([[1, 1, 1]])
    s1 = bp.bit_update(bp.init_state(np.array([0.3, -1.0, 2.0]), H1))
    assert s1.bit_to_check.tolist() == [0.3, -1.0, 2.0]


def test_decide_ties_to_zero():
    H = ParityCheckMatrix.from_dense([[1, 1, 1]])
    assert bp.decide(bp.init_state(np.array([0.0, 5.0, -5.0]), H)).tolist() == [0, 0, 1]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-20, 20, allow_nan=False).filter(lambda v: abs(v) > 1e-6), min_size=3, max_size=3))
def test_antisymmetry(llr):
    H = ParityCheckMatrix.from_dense([[1, 1, 1]])
    a = bp.decide(bp.init_state(np.array(llr), H))
    b = bp.decide(bp.init_state(-np.array(llr), H))
    assert np.all(a ^ b)


def test_noiseless_converges_in_one(code96):
    G = generator(code96)
    x = encode(np.random.default_rng(0).integers(0, 2, G.K), G)
    xh, it, ok = bp.decode(modulate_bpsk(x), code96, 0.5)
    assert ok and it == 1 and np.array_equal(xh, x)


def test_single_flip_corrected(code96):
    G = generator(code96)
    x = encode(np.random.default_rng(1).integers(0, 2, G.K), G)
    y = modulate_bpsk(x)
    y[10] = -0.5 * y[10]
    xh, _, ok = bp.decode(y, code96, 0.1)
    assert ok and np.array_equal(xh, x)


def test_max_iters_validated(code96):
    with pytest.raises(ValueError):
        bp.decode(np.ones(96), code96, 1.0, max_iters=0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=8))
def test_check_update_matches_definition(msgs):
    out = single_check(msgs)
    for i in range(len(msgs)):
        others = [m for j, m in enumerate(msgs) if j != i]
        sign = np.prod([1.0 if m >= 0 else -1.0 for m in others])
        assert out[i] == pytest.approx(sign * min(abs(m) for m in others))
