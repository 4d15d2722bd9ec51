"""Binary LDPC codes: parity-check matrices, construction, encoding, alist I/O."""
from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "AlistError",
    "CodeSpec",
    "GeneratorMatrix",
    "ParityCheckMatrix",
    "RankDeficientError",
    "all_codewords",
    "construct_regular_code",
    "encode",
    "generator",
    "girth",
    "load_alist",
    "save_alist",
    "syndrome",
    "to_systematic",
]


class RankDeficientError(ValueError):
    """Raised when H has linearly dependent rows over GF(2)."""

    def __init__(self, dependent_rows: Sequence[int]):
        self.dependent_rows = tuple(int(r) for r in dependent_rows)
        super().__init__(
            f"parity-check matrix is rank deficient; dependent rows: {list(self.dependent_rows)}"
        )


class AlistError(ValueError):
    pass


@dataclass(frozen=True)
class ParityCheckMatrix:
    """Sparse binary M x N matrix.

    ``rows[m]`` is the sorted tuple of bit indices in check ``m`` (N(c_m)).
    """

    M: int
    N: int
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.rows) != self.M:
            raise ValueError(f"expected {self.M} rows, got {len(self.rows)}")
        clean = []
        for m, row in enumerate(self.rows):
            r = tuple(sorted(int(j) for j in row))
            if len(set(r)) != len(r):
                raise ValueError(f"duplicate entry in row {m}")
            if r and (r[0] < 0 or r[-1] >= self.N):
                raise ValueError(f"row {m} has a column index outside [0, {self.N})")
            clean.append(r)
        object.__setattr__(self, "rows", tuple(clean))

    @classmethod
    def from_dense(cls, dense) -> "ParityCheckMatrix":
        a = np.asarray(dense)
        if a.ndim != 2:
            raise ValueError("dense parity-check matrix must be 2-D")
        if not np.isin(a, (0, 1)).all():
            raise ValueError("entries must be 0 or 1")
        return cls(a.shape[0], a.shape[1], tuple(tuple(np.flatnonzero(r).tolist()) for r in a))

    @classmethod
    def from_entries(cls, M: int, N: int, entries: Iterable[tuple[int, int]]) -> "ParityCheckMatrix":
        rows: list[list[int]] = [[] for _ in range(M)]
        for i, j in entries:
            if not (0 <= i < M and 0 <= j < N):
                raise ValueError(f"entry ({i}, {j}) out of range for {M}x{N}")
            rows[i].append(j)
        return cls(M, N, tuple(tuple(r) for r in rows))

    @cached_property
    def cols(self) -> tuple[tuple[int, ...], ...]:
        """``cols[n]`` is M(b_n), the checks containing bit ``n``."""
        cols: list[list[int]] = [[] for _ in range(self.N)]
        for m, row in enumerate(self.rows):
            for j in row:
                cols[j].append(m)
        return tuple(tuple(c) for c in cols)

    @cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Tanner edges as parallel (check, bit) index arrays, check-major."""
        chk = np.fromiter((m for m, row in enumerate(self.rows) for _ in row), dtype=np.int64)
        bit = np.fromiter((j for row in self.rows for j in row), dtype=np.int64)
        return chk, bit

    @property
    def num_edges(self) -> int:
        return sum(len(r) for r in self.rows)

    @property
    def row_weights(self) -> np.ndarray:
        return np.array([len(r) for r in self.rows], dtype=np.int64)

    @property
    def col_weights(self) -> np.ndarray:
        return np.array([len(c) for c in self.cols], dtype=np.int64)

    def is_regular(self, bit_degree: int, check_degree: int) -> bool:
        return bool(
            (self.col_weights == bit_degree).all() and (self.row_weights == check_degree).all()
        )

    @cached_property
    def dense(self) -> np.ndarray:
        a = np.zeros((self.M, self.N), dtype=np.uint8)
        chk, bit = self.edges
        a[chk, bit] = 1
        a.setflags(write=False)
        return a

    def to_dense(self) -> np.ndarray:
        return self.dense.copy()

    @cached_property
    def girth(self) -> float:
        return girth(self)

    def permute_rows(self, order: Sequence[int]) -> "ParityCheckMatrix":
        return ParityCheckMatrix(self.M, self.N, tuple(self.rows[i] for i in order))


@dataclass(frozen=True)
class CodeSpec:
    n: int
    bit_degree: int = 2
    check_degree: int = 3
    seed: int = 0
    target_girth: int | None = None

    def __post_init__(self):
        if self.n < 1 or self.bit_degree < 1 or self.check_degree < 2:
            raise ValueError("n >= 1, bit_degree >= 1 and check_degree >= 2 are required")
        if (self.n * self.bit_degree) % self.check_degree:
            raise ValueError(
                f"infeasible degrees: n*bit_degree={self.n * self.bit_degree} "
                f"is not divisible by check_degree={self.check_degree}"
            )

    @property
    def m(self) -> int:
        return self.n * self.bit_degree // self.check_degree


# --- girth -----------------------------------------------------------------


def girth(H: ParityCheckMatrix) -> float:
    """Length of the shortest Tanner-graph cycle (``math.inf`` for forests).

    BFS from every bit node; a non-tree edge closing at depths d1, d2 gives a
    cycle of length <= d1 + d2 + 1, and the minimum over all roots is exact.
    """
    best = math.inf
    # node ids: bits 0..N-1, checks N..N+M-1
    N = H.N
    cols, rows = H.cols, H.rows
    for root in range(N):
        depth = {root: 0}
        parent = {root: -1}
        q = deque([root])
        while q:
            u = q.popleft()
            if 2 * depth[u] >= best:
                break
            nbrs = [N + m for m in cols[u]] if u < N else list(rows[u - N])
            for v in nbrs:
                if v == parent[u]:
                    continue
                if v in depth:
                    best = min(best, depth[u] + depth[v] + 1)
                else:
                    depth[v] = depth[u] + 1
                    parent[v] = u
                    q.append(v)
    return best


# --- construction ----------------------------------------------------------


def _peg_attempt(spec: CodeSpec, rng: np.random.Generator) -> ParityCheckMatrix | None:
    n, dv, dc, m = spec.n, spec.bit_degree, spec.check_degree, spec.m
    check_bits: list[list[int]] = [[] for _ in range(m)]
    bit_checks: list[list[int]] = [[] for _ in range(n)]
    for b in rng.permutation(n):
        for _ in range(dv):
            open_checks = [c for c in range(m) if len(check_bits[c]) < dc and c not in bit_checks[b]]
            if not open_checks:
                return None
            if bit_checks[b]:
                # expand the Tanner tree from b; prefer checks never reached,
                # else those reached last
                reached = {c: 0 for c in bit_checks[b]}
                frontier = list(bit_checks[b])
                seen_bits = {b}
                level = 0
                while frontier:
                    level += 1
                    nxt = []
                    for c in frontier:
                        for bb in check_bits[c]:
                            if bb in seen_bits:
                                continue
                            seen_bits.add(bb)
                            for cc in bit_checks[bb]:
                                if cc not in reached:
                                    reached[cc] = level
                                    nxt.append(cc)
                    frontier = nxt
                unreached = [c for c in open_checks if c not in reached]
                if unreached:
                    cands = unreached
                else:
                    far = max(reached[c] for c in open_checks)
                    cands = [c for c in open_checks if reached[c] == far]
            else:
                cands = open_checks
            low = min(len(check_bits[c]) for c in cands)
            cands = [c for c in cands if len(check_bits[c]) == low]
            c = cands[int(rng.integers(len(cands)))]
            check_bits[c].append(int(b))
            bit_checks[b].append(c)
    return ParityCheckMatrix(m, n, tuple(tuple(r) for r in check_bits))


def construct_regular_code(spec: CodeSpec, max_attempts: int = 50) -> ParityCheckMatrix:
    """Progressive-edge-growth construction of a (bit_degree, check_degree)-regular code.

    Deterministic for a fixed ``spec.seed``.  When ``spec.target_girth`` is set,
    restarts (with seeds derived from ``spec.seed``) until it is met or the
    budget runs out; the best code found is returned either way and a warning
    reports the shortfall.
    """
    best: ParityCheckMatrix | None = None
    ss = np.random.SeedSequence(spec.seed)
    for child in ss.spawn(max_attempts):
        H = _peg_attempt(spec, np.random.default_rng(child))
        if H is None:
            continue
        if best is None or H.girth > best.girth:
            best = H
        if spec.target_girth is None or best.girth >= spec.target_girth:
            break
    if best is None:
        raise RuntimeError(f"no regular code found for {spec} in {max_attempts} attempts")
    if spec.target_girth is not None and best.girth < spec.target_girth:
        warnings.warn(
            f"target girth {spec.target_girth} not reached; best girth {best.girth}",
            RuntimeWarning,
            stacklevel=2,
        )
    return best


# --- GF(2) encoding ---------------------------------------------------------


def _pack(H: ParityCheckMatrix) -> list[int]:
    # bit j of the int <-> column j
    return [sum(1 << j for j in row) for row in H.rows]


def _reduce(H: ParityCheckMatrix) -> tuple[list[int], dict[int, int], list[int]]:
    """Gauss-Jordan over GF(2), pivot columns picked from the right.

    Returns the reduced packed rows, {pivot column: pivot row} and the list of
    rows that reduced to zero.
    """
    rows = _pack(H)
    pivot_of: dict[int, int] = {}
    used = [False] * H.M
    for col in range(H.N - 1, -1, -1):
        mask = 1 << col
        pr = next((r for r in range(H.M) if not used[r] and rows[r] & mask), None)
        if pr is None:
            continue
        used[pr] = True
        pivot_of[col] = pr
        for r in range(H.M):
            if r != pr and rows[r] & mask:
                rows[r] ^= rows[pr]
        if len(pivot_of) == H.M:
            break
    dependent = [r for r in range(H.M) if not used[r]]
    return rows, pivot_of, dependent


def to_systematic(
    H: ParityCheckMatrix, allow_dependent: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Column-permute and row-reduce H into ``[P | I]``.

    Returns ``(P, perm)`` where ``perm[k]`` is the original column placed at
    position ``k``.  Dependent rows raise :class:`RankDeficientError` unless
    ``allow_dependent`` is set, in which case they are excluded from ``P``;
    :func:`generator` records them.
    """
    rows, pivot_of, dependent = _reduce(H)
    if dependent and not allow_dependent:
        raise RankDeficientError(dependent)
    pivots = sorted(pivot_of)
    pivot_set = set(pivots)
    free = [c for c in range(H.N) if c not in pivot_set]
    perm = np.array(free + pivots, dtype=np.int64)
    K = len(free)
    P = np.zeros((len(pivots), K), dtype=np.uint8)
    for i, col in enumerate(pivots):
        word = rows[pivot_of[col]]
        for k, c in enumerate(free):
            P[i, k] = (word >> c) & 1
    return P, perm


@dataclass(frozen=True)
class GeneratorMatrix:
    """Systematic generator ``G = [I_K | P^T]`` in permuted column order."""

    G: np.ndarray
    perm: np.ndarray
    redundant_rows: tuple[int, ...] = field(default=())

    @property
    def K(self) -> int:
        return self.G.shape[0]

    @property
    def N(self) -> int:
        return self.G.shape[1]

    @property
    def message_positions(self) -> np.ndarray:
        """Original-order positions carrying the K message bits."""
        return self.perm[: self.K]

    @property
    def rate(self) -> float:
        return self.K / self.N


def generator(H: ParityCheckMatrix) -> GeneratorMatrix:
    P, perm = to_systematic(H, allow_dependent=True)
    _, _, dependent = _reduce(H)
    K = P.shape[1]
    G = np.concatenate([np.eye(K, dtype=np.uint8), P.T.astype(np.uint8)], axis=1)
    return GeneratorMatrix(G, perm, tuple(dependent))


def encode(u, G: GeneratorMatrix) -> np.ndarray:
    """Codeword ``uG`` over GF(2), returned in the original column order."""
    u = np.asarray(u, dtype=np.uint8)
    if u.shape[-1] != G.K:
        raise ValueError(f"message length {u.shape[-1]} != K={G.K}")
    c_perm = (u @ G.G.astype(np.int64)) % 2
    out = np.empty_like(c_perm, dtype=np.uint8)
    out[..., G.perm] = c_perm
    return out


def syndrome(x, H: ParityCheckMatrix) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[-1] != H.N:
        raise ValueError(f"word length {x.shape[-1]} != N={H.N}")
    return ((x.astype(np.int64) @ H.dense.T.astype(np.int64)) % 2).astype(np.uint8)


def all_codewords(G: GeneratorMatrix) -> np.ndarray:
    """Every codeword of a small code (2**K rows)."""
    if G.K > 24:
        raise ValueError(f"K={G.K} too large to enumerate")
    msgs = ((np.arange(2**G.K)[:, None] >> np.arange(G.K)[None, :]) & 1).astype(np.uint8)
    return encode(msgs, G)


# --- alist ------------------------------------------------------------------


def save_alist(H: ParityCheckMatrix, path) -> None:
    cols = H.cols
    lines = [
        f"{H.N} {H.M}",
        f"{max((len(c) for c in cols), default=0)} {max((len(r) for r in H.rows), default=0)}",
        " ".join(str(len(c)) for c in cols),
        " ".join(str(len(r)) for r in H.rows),
    ]
    # an empty list is written as a single 0 so no line is blank
    lines += [" ".join(str(m + 1) for m in c) or "0" for c in cols]
    lines += [" ".join(str(j + 1) for j in r) or "0" for r in H.rows]
    Path(path).write_text("\n".join(lines) + "\n")


def load_alist(path) -> ParityCheckMatrix:
    """Parse a MacKay-style alist file, validating every declared count.

    Zero padding in the index lists is accepted.
    """
    text = Path(path).read_text()
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]

    def ints(i: int, what: str) -> list[int]:
        if i >= len(lines):
            raise AlistError(f"truncated alist: missing {what} (line {i + 1})")
        try:
            return [int(t) for t in lines[i]]
        except ValueError as exc:
            raise AlistError(f"non-integer token in {what} (line {i + 1})") from exc

    head = ints(0, "header")
    if len(head) != 2:
        raise AlistError("header must be 'N M'")
    N, M = head
    maxes = ints(1, "max degrees")
    if len(maxes) != 2:
        raise AlistError("second line must hold the two maximum degrees")
    col_deg = ints(2, "column degrees")
    row_deg = ints(3, "row degrees")
    if len(col_deg) != N or len(row_deg) != M:
        raise AlistError("degree list lengths do not match N/M")
    if max(col_deg, default=0) != maxes[0] or max(row_deg, default=0) != maxes[1]:
        raise AlistError("declared maximum degrees do not match degree lists")
    if len(lines) < 4 + N + M:
        raise AlistError(f"truncated alist: expected {4 + N + M} non-empty lines, got {len(lines)}")
    col_entries = set()
    for n in range(N):
        idx = [v for v in ints(4 + n, f"column {n}") if v != 0]
        if len(idx) != col_deg[n]:
            raise AlistError(f"column {n}: declared degree {col_deg[n]}, found {len(idx)}")
        for v in idx:
            if not 1 <= v <= M:
                raise AlistError(f"column {n}: row index {v} out of range")
            col_entries.add((v - 1, n))
    row_entries = set()
    for m in range(M):
        idx = [v for v in ints(4 + N + m, f"row {m}") if v != 0]
        if len(idx) != row_deg[m]:
            raise AlistError(f"row {m}: declared degree {row_deg[m]}, found {len(idx)}")
        for v in idx:
            if not 1 <= v <= N:
                raise AlistError(f"row {m}: column index {v} out of range")
            row_entries.add((m, v - 1))
    if col_entries != row_entries:
        raise AlistError("column and row index lists disagree")
    return ParityCheckMatrix.from_entries(M, N, sorted(row_entries))
