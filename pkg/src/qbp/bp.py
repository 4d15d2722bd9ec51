"""Flooding-schedule min-sum belief propagation.

LLRs follow the log(P(0)/P(1)) convention, so BPSK (0 -> -1, 1 -> +1) over
AWGN gives LLR = -2y/sigma^2 and a non-negative posterior sum decodes to 0.
Messages live on Tanner edges stored in check-major order (``H.edges``).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .ldpc import ParityCheckMatrix, syndrome

__all__ = ["LlrState", "bit_update", "check_update", "decide", "decode", "init_llr", "init_state"]


def init_llr(y, sigma2) -> np.ndarray:
    sigma2 = np.asarray(sigma2, dtype=float)
    if np.any(sigma2 <= 0):
        raise ValueError("sigma2 must be positive")
    return -2.0 * np.asarray(y, dtype=float) / sigma2


@lru_cache(maxsize=32)
def _check_table(H: ParityCheckMatrix) -> np.ndarray:
    """(M, max_degree) table of edge ids per check, padded with -1."""
    width = max((len(r) for r in H.rows), default=0)
    table = np.full((H.M, width), -1, dtype=np.int64)
    e = 0
    for m, row in enumerate(H.rows):
        if len(row) < 2:
            raise ValueError(f"check {m} has degree {len(row)}; min-sum needs degree >= 2")
        table[m, : len(row)] = np.arange(e, e + len(row))
        e += len(row)
    return table


@dataclass(frozen=True)
class LlrState:
    H: ParityCheckMatrix
    prior: np.ndarray
    bit_to_check: np.ndarray
    check_to_bit: np.ndarray
    iteration: int = 0


def init_state(llr, H: ParityCheckMatrix) -> LlrState:
    llr = np.asarray(llr, dtype=float)
    if llr.shape != (H.N,):
        raise ValueError(f"expected {H.N} LLRs, got shape {llr.shape}")
    _, bit = H.edges
    return LlrState(H, llr, llr[bit].copy(), np.zeros(H.num_edges))


def check_update(state: LlrState) -> LlrState:
    table = _check_table(state.H)
    z = state.bit_to_check
    pad = table < 0
    idx = np.where(pad, 0, table)
    mag = np.where(pad, np.inf, np.abs(z[idx]))
    neg = np.where(pad, False, z[idx] < 0)

    rows = np.arange(table.shape[0])
    first = np.argmin(mag, axis=1)
    min1 = mag[rows, first]
    masked = mag.copy()
    masked[rows, first] = np.inf
    min2 = masked.min(axis=1)

    out_mag = np.repeat(min1[:, None], table.shape[1], axis=1)
    out_mag[rows, first] = min2
    parity = np.logical_xor.reduce(neg, axis=1)
    out_sign = np.where(parity[:, None] ^ neg, -1.0, 1.0)

    c2b = np.empty_like(z)
    c2b[table[~pad]] = (out_sign * out_mag)[~pad]
    return replace(state, check_to_bit=c2b)


def _posterior(state: LlrState) -> np.ndarray:
    _, bit = state.H.edges
    return state.prior + np.bincount(bit, weights=state.check_to_bit, minlength=state.H.N)


def bit_update(state: LlrState) -> LlrState:
    _, bit = state.H.edges
    total = _posterior(state)
    return replace(state, bit_to_check=total[bit] - state.check_to_bit)


def decide(state: LlrState) -> np.ndarray:
    return (_posterior(state) < 0).astype(np.uint8)


def decode(y, H: ParityCheckMatrix, sigma2, max_iters: int = 10) -> tuple[np.ndarray, int, bool]:
    """Run min-sum until the hard decision satisfies every check or ``max_iters``."""
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    y = np.asarray(y, dtype=float)
    if y.shape != (H.N,):
        raise ValueError(f"expected received vector of length {H.N}, got {y.shape}")
    state = init_state(init_llr(y, sigma2), H)
    x_hat = decide(state)
    for it in range(1, max_iters + 1):
        state = bit_update(check_update(state))
        state = replace(state, iteration=it)
        x_hat = decide(state)
        if not syndrome(x_hat, H).any():
            return x_hat, it, True
    return x_hat, max_iters, False
