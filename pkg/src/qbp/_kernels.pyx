# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: Metropolis annealing and Gray-code enumeration.

Random numbers come from one splitmix64 stream per read, seeded from
(seed, read index); the pure-Python fallback reproduces the same streams.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t next_u64(uint64_t* state) nogil:
    state[0] += GOLDEN
    return mix64(state[0])


cdef inline double next_uniform(uint64_t* state) nogil:
    return <double>(next_u64(state) >> 11) * (1.0 / 9007199254740992.0)


def anneal_reads(
    const double[::1] h,
    const int64_t[::1] indptr,
    const int64_t[::1] indices,
    const double[::1] data,
    const double[::1] betas,
    uint64_t seed,
    int64_t first_read,
    int64_t num_reads,
):
    """Ising spins (num_reads, n) after single-flip Metropolis sweeps."""
    cdef Py_ssize_t n = h.shape[0]
    cdef Py_ssize_t n_sweeps = betas.shape[0]
    out = np.empty((num_reads, n), dtype=np.int8)
    cdef signed char[:, ::1] res = out
    cdef double[::1] field = np.empty(n, dtype=np.float64)
    cdef signed char[::1] s = np.empty(n, dtype=np.int8)
    cdef Py_ssize_t r, i, k, t
    cdef uint64_t state
    cdef double beta, de, u, f
    cdef signed char si
    with nogil:
        for r in range(num_reads):
            state = mix64(seed + GOLDEN * <uint64_t>(first_read + r + 1))
            for i in range(n):
                s[i] = 1 if (next_u64(&state) >> 63) else -1
            for i in range(n):
                f = h[i]
                for k in range(indptr[i], indptr[i + 1]):
                    f = f + data[k] * s[indices[k]]
                field[i] = f
            for t in range(n_sweeps):
                beta = betas[t]
                for i in range(n):
                    si = s[i]
                    de = -2.0 * si * field[i]
                    u = next_uniform(&state)
                    if de <= 0.0 or u < exp(-beta * de):
                        s[i] = -si
                        for k in range(indptr[i], indptr[i + 1]):
                            field[indices[k]] = field[indices[k]] - 2.0 * data[k] * si
            for i in range(n):
                res[r, i] = s[i]
    return out


cdef double _qubo_energy(const double[::1] h, const double[:, ::1] J, uint64_t code, Py_ssize_t n) nogil:
    cdef double e = 0.0
    cdef Py_ssize_t i, j
    for i in range(n):
        if (code >> i) & 1:
            e += h[i]
            for j in range(i + 1, n):
                if (code >> j) & 1:
                    e += J[i, j]
    return e


def gray_ground(const double[::1] h, const double[:, ::1] J, double tol, int64_t max_keep=4096):
    """Lowest QUBO energy (no offset) and all codes within ``tol`` of it.

    ``J`` is a dense symmetric coupling matrix with zero diagonal.  Energies
    are updated incrementally along a Gray code and recomputed exactly every
    4096 steps to bound rounding drift.
    """
    cdef Py_ssize_t n = h.shape[0]
    if n > 40:
        raise ValueError("too many variables to enumerate")
    cdef uint64_t total = (<uint64_t>1) << n
    cdef double[::1] field = np.array(h, dtype=np.float64)
    cdef uint64_t code = 0, step, g
    cdef double e = 0.0, best = 0.0, limit
    cdef Py_ssize_t i, j, bit
    keep = [0]
    cdef list keep_list = keep
    best = 0.0
    for step in range(1, total):
        g = step
        bit = 0
        while (g & 1) == 0:
            g >>= 1
            bit += 1
        if (code >> bit) & 1:
            e -= field[bit]
            code ^= (<uint64_t>1) << bit
            for j in range(n):
                field[j] -= J[bit, j]
        else:
            e += field[bit]
            code ^= (<uint64_t>1) << bit
            for j in range(n):
                field[j] += J[bit, j]
        if (step & 4095) == 0:
            e = _qubo_energy(h, J, code, n)
        if e < best - tol:
            best = e
            keep_list = [code]
        elif e <= best + tol:
            if e < best:
                best = e
            keep_list.append(code)
            if len(keep_list) > max_keep:
                limit = best + tol
                keep_list = [c for c in keep_list if _qubo_energy(h, J, c, n) <= limit]
                if len(keep_list) > max_keep:
                    raise ValueError("too many near-degenerate ground states")
    return best, np.array(keep_list, dtype=np.uint64)
