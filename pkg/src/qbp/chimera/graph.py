"""Chimera hardware graph.

An L x L grid of unit cells, eight qubits each.  Qubit ``k < 4`` sits in the
left partition and couples to the same ``k`` in the cells above and below;
``k >= 4`` sits in the right partition and couples horizontally.  Inside a
cell every left qubit couples to every right qubit.  Cell (x, y) has its
origin at the bottom-left and qubit id ``8 * (y * L + x) + k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import networkx as nx

Cell = tuple[int, int]

LEFT = range(0, 4)
RIGHT = range(4, 8)


def neighbors(cell: Cell, L: int) -> set[Cell]:
    """Cells at Manhattan distance one inside an L x L grid."""
    x, y = cell
    if not (0 <= x < L and 0 <= y < L):
        raise ValueError(f"cell {cell} outside a {L}x{L} grid")
    cand = [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)]
    return {(a, b) for a, b in cand if 0 <= a < L and 0 <= b < L}


@dataclass(frozen=True)
class ChimeraGraph:
    L: int
    defective: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("grid size must be >= 1")
        bad = frozenset(int(q) for q in self.defective)
        if any(not 0 <= q < self.num_qubits for q in bad):
            raise ValueError("defective qubit id out of range")
        object.__setattr__(self, "defective", bad)

    @property
    def num_qubits(self) -> int:
        return 8 * self.L * self.L

    def qubit(self, x: int, y: int, k: int) -> int:
        return 8 * (y * self.L + x) + k

    def coords(self, q: int) -> tuple[int, int, int]:
        cell, k = divmod(q, 8)
        y, x = divmod(cell, self.L)
        return x, y, k

    def cell_of(self, q: int) -> Cell:
        x, y, _ = self.coords(q)
        return x, y

    def cells(self) -> list[Cell]:
        return [(x, y) for y in range(self.L) for x in range(self.L)]

    def cell_is_clean(self, cell: Cell) -> bool:
        x, y = cell
        return not any(self.qubit(x, y, k) in self.defective for k in range(8))

    def neighbors(self, cell: Cell) -> set[Cell]:
        return neighbors(cell, self.L)

    @cached_property
    def qubits(self) -> frozenset[int]:
        return frozenset(range(self.num_qubits)) - self.defective

    def _all_couplers(self) -> Iterable[tuple[int, int]]:
        L = self.L
        for y in range(L):
            for x in range(L):
                for i in LEFT:
                    for j in RIGHT:
                        yield self.qubit(x, y, i), self.qubit(x, y, j)
                if y + 1 < L:
                    for k in LEFT:
                        yield self.qubit(x, y, k), self.qubit(x, y + 1, k)
                if x + 1 < L:
                    for k in RIGHT:
                        yield self.qubit(x, y, k), self.qubit(x + 1, y, k)

    @cached_property
    def couplers(self) -> frozenset[tuple[int, int]]:
        bad = self.defective
        return frozenset(
            (u, v) for u, v in self._all_couplers() if u not in bad and v not in bad
        )

    def has_coupler(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self.couplers

    @cached_property
    def adjacency(self) -> dict[int, frozenset[int]]:
        adj: dict[int, set[int]] = {q: set() for q in self.qubits}
        for u, v in self.couplers:
            adj[u].add(v)
            adj[v].add(u)
        return {q: frozenset(n) for q, n in adj.items()}

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(sorted(self.qubits))
        g.add_edges_from(sorted(self.couplers))
        return g
