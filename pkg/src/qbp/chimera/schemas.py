"""Unit-cell schemas for one degree-3 check per cell and the nine-cell
ensemble that hosts an extra check on the qubits those schemas leave idle.

Each cell leaves one left and one right qubit idle.  The idle left index is
fixed per grid column and the idle right index per grid row, so idle left
qubits of a column form a vertical path, idle right qubits of a row form a
horizontal path, and the two idle qubits of a cell are coupled to each other.
The four idle pairs are the schema types:

    A: (q1, q6)   B: (q1, q5)   C: (q2, q6)   D: (q2, q5)
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Hashable, Iterator, Mapping, Sequence

from .graph import Cell, ChimeraGraph

SCHEMA_IDLE = {"A": (1, 6), "B": (1, 5), "C": (2, 6), "D": (2, 5)}


class SchemaError(ValueError):
    pass


def idle_left(cell: Cell) -> int:
    return 1 if cell[0] % 2 == 0 else 2


def idle_right(cell: Cell) -> int:
    return 6 if cell[1] % 2 == 0 else 5


def schema_type(cell: Cell) -> str:
    pair = (idle_left(cell), idle_right(cell))
    return next(t for t, p in SCHEMA_IDLE.items() if p == pair)


def active_left(cell: Cell) -> list[int]:
    return [k for k in range(4) if k != idle_left(cell)]


def active_right(cell: Cell) -> list[int]:
    # ordered so that Type A yields the reference template (b on q4, c on q7)
    i = idle_right(cell)
    order = [4, 5, 7] if i == 6 else [4, 6, 7]
    return order


def vertical_link_k(lower: Cell) -> int:
    """Left-partition index carrying a bit between ``lower`` and the cell above."""
    return 0 if lower[1] % 2 == 0 else 3


def horizontal_link_k(left_cell: Cell) -> int:
    """Right-partition index carrying a bit between ``left_cell`` and the cell to its right."""
    return 4 if left_cell[0] % 2 == 0 else 7


def link_k(c1: Cell, c2: Cell) -> int:
    (x1, y1), (x2, y2) = sorted([c1, c2], key=lambda c: (c[1], c[0]))
    if x1 == x2 and y2 == y1 + 1:
        return vertical_link_k((x1, y1))
    (x1, y1), (x2, y2) = sorted([c1, c2])
    if y1 == y2 and x2 == x1 + 1:
        return horizontal_link_k((x1, y1))
    raise SchemaError(f"cells {c1} and {c2} are not grid neighbours")


@dataclass(frozen=True)
class Pin:
    """Requirement on a variable's in-cell chain part.

    ``k`` demands that exact qubit index; ``side`` ('L' or 'R') demands at
    least one qubit from that partition.
    """

    k: int | None = None
    side: str | None = None

    def satisfied_by(self, ks: Sequence[int]) -> bool:
        if self.k is not None and self.k not in ks:
            return False
        if self.side == "L" and not any(k < 4 for k in ks):
            return False
        if self.side == "R" and not any(k >= 4 for k in ks):
            return False
        return True


def solve_cell(
    variables: Sequence[Hashable],
    cell: Cell,
    pins: Mapping[Hashable, Sequence[Pin]] | None = None,
) -> dict[Hashable, tuple[int, ...]]:
    """Assign up to four logical variables to the six active qubits of a cell.

    Roles are one left singleton, one right singleton and two left-right
    pairs; any assignment of four variables to these roles realizes all six
    pairwise couplings.  The first candidate tried for ``(a, b, c, e)`` is the
    reference template: a -> left[0], b -> (left[1], right[0]),
    c -> right[2], e -> (left[2], right[1]).
    """
    variables = list(variables)
    if not 1 <= len(variables) <= 4:
        raise SchemaError("a cell hosts between one and four variables")
    pins = pins or {}
    for v in pins:
        if v not in variables:
            raise SchemaError(f"pinned variable {v!r} is not hosted by the cell")
    slots = list(variables) + [None] * (4 - len(variables))
    lefts, rights = active_left(cell), active_right(cell)
    # role order: SL, P1, P2, SR ; template places (a, b, e, c)
    template = [slots[0], slots[1], slots[3], slots[2]]
    seen = set()
    for role_perm in itertools.permutations(range(4)):
        roles = [template[i] for i in role_perm]
        key = (roles[0], frozenset(roles[1:3]), roles[3])
        if key in seen:
            continue
        seen.add(key)
        for lp in itertools.permutations(lefts):
            for rp in itertools.permutations(rights):
                parts = {
                    roles[0]: (lp[0],),
                    roles[1]: (lp[1], rp[0]),
                    roles[2]: (lp[2], rp[1]),
                    roles[3]: (rp[2],),
                }
                if all(
                    p.satisfied_by(parts[v]) for v, plist in pins.items() for p in plist
                ):
                    return {v: ks for v, ks in parts.items() if v is not None}
    raise SchemaError(f"no schema assignment in cell {cell} satisfies pins {dict(pins)}")


def level1_embed(
    check_vars: Sequence[Hashable],
    cell: Cell,
    graph: ChimeraGraph,
    schema: str | None = None,
    pins: Mapping[Hashable, Sequence[Pin]] | None = None,
) -> dict[Hashable, tuple[int, ...]]:
    """Physical qubits for the variables ``(a, b, c, e)`` of one check in ``cell``."""
    if len(check_vars) != 4:
        raise SchemaError("a cell check needs exactly four variables (three bits, one ancilla)")
    expected = schema_type(cell)
    if schema is not None and schema != expected:
        raise SchemaError(f"cell {cell} uses schema {expected}, not {schema}")
    if not graph.cell_is_clean(cell):
        raise SchemaError(f"cell {cell} contains a defective qubit")
    parts = solve_cell(check_vars, cell, pins)
    x, y = cell
    return {v: tuple(graph.qubit(x, y, k) for k in ks) for v, ks in parts.items()}


# --- nine-cell ensembles ------------------------------------------------------

# local idle node id: 2 * (j * 3 + i) + side, side 0 = idle left, 1 = idle right
def _node(i: int, j: int, side: int) -> int:
    return 2 * (j * 3 + i) + side


def _node_cell(n: int) -> tuple[int, int]:
    c = n // 2
    return c % 3, c // 3


@lru_cache(maxsize=1)
def _idle_adjacency() -> tuple[int, ...]:
    adj = [0] * 18
    for j in range(3):
        for i in range(3):
            a, b = _node(i, j, 0), _node(i, j, 1)
            pairs = [(a, b)]
            if j < 2:
                pairs.append((a, _node(i, j + 1, 0)))
            if i < 2:
                pairs.append((b, _node(i + 1, j, 1)))
            for u, v in pairs:
                adj[u] |= 1 << v
                adj[v] |= 1 << u
    return tuple(adj)


@lru_cache(maxsize=None)
def _connected_subsets(available: int, max_size: int) -> tuple[tuple[int, int, int], ...]:
    """(mask, size, neighbour mask) for connected subsets of the available idle nodes."""
    adj = _idle_adjacency()
    out = {}
    frontier = set()
    for n in range(18):
        if available >> n & 1:
            frontier.add(1 << n)
    size = 1
    while frontier and size <= max_size:
        for m in frontier:
            out[m] = size
        if size == max_size:
            break
        nxt = set()
        for m in frontier:
            nb = 0
            mm = m
            while mm:
                low = mm & -mm
                nb |= adj[low.bit_length() - 1]
                mm ^= low
            nb &= available & ~m
            while nb:
                low = nb & -nb
                nxt.add(m | low)
                nb ^= low
        frontier = nxt
        size += 1
    res = []
    for m, s in out.items():
        nb = 0
        mm = m
        while mm:
            low = mm & -mm
            nb |= adj[low.bit_length() - 1]
            mm ^= low
        res.append((m, s, nb & ~m))
    res.sort(key=lambda t: (t[1], t[0]))
    return tuple(res)


def _cell_mask(i: int, j: int) -> int:
    return (1 << _node(i, j, 0)) | (1 << _node(i, j, 1))


def level2_solutions(
    link_cells: Sequence[tuple[int, int]],
    available: int = (1 << 18) - 1,
    max_chain: int = 6,
    max_total: int = 20,
    min_chain: int = 3,
) -> Iterator[tuple[int, int, int, int]]:
    """Yield idle-node masks (A, B, C, E) in order of increasing total size.

    Chain ``A`` must touch local cell ``link_cells[0]``, ``B`` the second and
    ``C`` the third; ``E`` is unconstrained.  All four chains are connected,
    pairwise disjoint and pairwise adjacent, with ``min_chain`` to
    ``max_chain`` nodes each.
    """
    subsets = _connected_subsets(available, max_chain)
    need = [_cell_mask(*c) for c in link_cells] + [0]
    by_role = []
    for cm in need:
        by_size: dict[int, list[tuple[int, int]]] = {}
        for m, s, nb in subsets:
            if cm == 0 or m & cm:
                by_size.setdefault(s, []).append((m, nb))
        by_role.append(by_size)

    def rec(role: int, budget: int, used: int, nbs: list[int], chosen: list[int]):
        if role == 4:
            if budget == 0:
                yield tuple(chosen)
            return
        remaining_roles = 3 - role
        for s in range(min_chain, min(max_chain, budget - remaining_roles * min_chain) + 1):
            if role == 3 and s != budget:
                continue
            for m, nb in by_role[role].get(s, ()):
                if m & used:
                    continue
                if any(not (m & other) for other in nbs):
                    continue
                chosen.append(m)
                nbs.append(nb)
                yield from rec(role + 1, budget - s, used | m, nbs, chosen)
                chosen.pop()
                nbs.pop()

    for total in range(4 * min_chain, max_total + 1):
        yield from rec(0, total, 0, [], [])


def mask_nodes(mask: int) -> list[int]:
    return [n for n in range(18) if mask >> n & 1]


def ensemble_qubits(mask: int, origin: Cell, graph: ChimeraGraph) -> tuple[int, ...]:
    """Physical qubit ids of local idle nodes in the ensemble at ``origin``."""
    ox, oy = origin
    out = []
    for n in mask_nodes(mask):
        i, j = _node_cell(n)
        cell = (ox + i, oy + j)
        k = idle_left(cell) if n % 2 == 0 else idle_right(cell)
        out.append(graph.qubit(cell[0], cell[1], k))
    return tuple(sorted(out))


def ensemble_available(origin: Cell, graph: ChimeraGraph) -> int:
    ox, oy = origin
    mask = 0
    for j in range(3):
        for i in range(3):
            cell = (ox + i, oy + j)
            if not (0 <= cell[0] < graph.L and 0 <= cell[1] < graph.L):
                raise SchemaError(f"ensemble at {origin} leaves the grid")
            if graph.qubit(*cell, idle_left(cell)) not in graph.defective:
                mask |= 1 << _node(i, j, 0)
            if graph.qubit(*cell, idle_right(cell)) not in graph.defective:
                mask |= 1 << _node(i, j, 1)
    return mask


def link_side_pin(mask: int, local_cell: tuple[int, int]) -> Pin | None:
    """Pin for the in-cell part of a bit whose ensemble chain touches ``local_cell``.

    An idle left qubit couples to the cell's right qubits and vice versa, so
    a chain touching only one idle qubit forces the opposite partition.
    """
    has_l = bool(mask >> _node(*local_cell, 0) & 1)
    has_r = bool(mask >> _node(*local_cell, 1) & 1)
    if has_l and has_r:
        return None
    if has_l:
        return Pin(side="R")
    if has_r:
        return Pin(side="L")
    raise SchemaError(f"chain does not reach local cell {local_cell}")
