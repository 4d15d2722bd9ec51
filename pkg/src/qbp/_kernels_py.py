"""NumPy fallback for the compiled kernels.

Annealing is vectorized across reads; each read consumes its splitmix64
stream in the same order as the compiled loop, so both backends return
identical spins for identical inputs.
"""
from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class _Streams:
    def __init__(self, seed: int, first_read: int, num_reads: int):
        idx = np.arange(first_read + 1, first_read + num_reads + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            self.state = _mix64(np.uint64(seed) + _GOLDEN * idx)

    def next_u64(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            self.state = self.state + _GOLDEN
            return _mix64(self.state)

    def next_uniform(self) -> np.ndarray:
        return (self.next_u64() >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def anneal_reads(h, indptr, indices, data, betas, seed, first_read, num_reads):
    h = np.asarray(h, dtype=np.float64)
    n = h.shape[0]
    streams = _Streams(int(seed), int(first_read), int(num_reads))
    s = np.empty((num_reads, n), dtype=np.int8)
    with np.errstate(over="ignore"):
        for i in range(n):
            s[:, i] = np.where((streams.next_u64() >> np.uint64(63)) != 0, 1, -1)
    nbr = [
        (indices[indptr[i] : indptr[i + 1]], data[indptr[i] : indptr[i + 1]]) for i in range(n)
    ]
    field = np.empty((num_reads, n), dtype=np.float64)
    for i in range(n):
        f = np.full(num_reads, h[i])
        idx, vals = nbr[i]
        for k in range(len(idx)):
            f = f + vals[k] * s[:, idx[k]]
        field[:, i] = f
    for beta in np.asarray(betas, dtype=np.float64):
        for i in range(n):
            si = s[:, i].astype(np.float64)
            de = -2.0 * si * field[:, i]
            u = streams.next_uniform()
            with np.errstate(over="ignore"):
                flip = (de <= 0.0) | (u < np.exp(-beta * de))
            if not flip.any():
                continue
            s[flip, i] = -s[flip, i]
            idx, vals = nbr[i]
            if len(idx):
                field[np.ix_(flip, idx)] -= 2.0 * vals[None, :] * si[flip, None]
    return s


def _qubo_energy(h, J, codes, n):
    x = ((codes[:, None] >> np.arange(n, dtype=np.uint64)[None, :]) & np.uint64(1)).astype(float)
    return x @ h + 0.5 * np.einsum("si,ij,sj->s", x, J, x)


def gray_ground(h, J, tol, max_keep=4096):
    """Same contract as the compiled version, by chunked brute force."""
    h = np.asarray(h, dtype=np.float64)
    J = np.asarray(J, dtype=np.float64)
    n = h.shape[0]
    if n > 40:
        raise ValueError("too many variables to enumerate")
    best = np.inf
    keep: list[np.ndarray] = []
    chunk = 1 << 16
    for start in range(0, 1 << n, chunk):
        codes = np.arange(start, min(start + chunk, 1 << n), dtype=np.uint64)
        e = _qubo_energy(h, J, codes, n)
        m = e.min()
        if m < best - tol:
            keep = []
        best = min(best, m)
        keep.append(codes[e <= best + tol])
        if sum(len(k) for k in keep) > max_keep:
            allc = np.concatenate(keep)
            allc = allc[_qubo_energy(h, J, allc, n) <= best + tol]
            if len(allc) > max_keep:
                raise ValueError("too many near-degenerate ground states")
            keep = [allc]
    allc = np.concatenate(keep) if keep else np.zeros(0, dtype=np.uint64)
    allc = allc[_qubo_energy(h, J, allc, n) <= best + tol]
    return float(best), allc
