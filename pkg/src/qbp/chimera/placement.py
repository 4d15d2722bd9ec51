"""Check placement: which cell or 3x3 ensemble hosts each parity check."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import networkx as nx

from ..ldpc import ParityCheckMatrix
from .graph import Cell, ChimeraGraph

__all__ = ["CodeLayout", "PlacementError", "place_checks", "validate_layout"]


class PlacementError(ValueError):
    def __init__(self, message: str, checks: Iterable[int] = ()):
        self.checks = tuple(sorted(set(int(c) for c in checks)))
        if self.checks:
            shown = list(self.checks[:20])
            more = "" if len(self.checks) <= 20 else f" (+{len(self.checks) - 20} more)"
            message = f"{message}; unplaceable checks: {shown}{more}"
        super().__init__(message)


def block_cells(origin: Cell) -> list[Cell]:
    ox, oy = origin
    return [(ox + i, oy + j) for j in range(3) for i in range(3)]


@dataclass(frozen=True)
class CodeLayout:
    """``level1``: check -> cell; ``level2``: check -> origin of its 3x3 ensemble."""

    L: int
    level1: dict[int, Cell]
    level2: dict[int, Cell] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "level1", {int(m): (int(c[0]), int(c[1])) for m, c in self.level1.items()}
        )
        object.__setattr__(
            self, "level2", {int(m): (int(c[0]), int(c[1])) for m, c in self.level2.items()}
        )

    @property
    def num_checks(self) -> int:
        return len(self.level1) + len(self.level2)

    def cell_of(self) -> dict[Cell, int]:
        return {c: m for m, c in self.level1.items()}

    def ensemble_of(self) -> dict[Cell, int]:
        """Cell -> Level-II check whose ensemble covers it."""
        out = {}
        for m, origin in self.level2.items():
            for c in block_cells(origin):
                out[c] = m
        return out

    def to_json(self) -> dict:
        return {
            "L": self.L,
            "level1": {str(m): list(c) for m, c in sorted(self.level1.items())},
            "level2": {str(m): list(c) for m, c in sorted(self.level2.items())},
        }

    @classmethod
    def from_json(cls, d) -> "CodeLayout":
        return cls(
            int(d["L"]),
            {int(m): tuple(c) for m, c in d["level1"].items()},
            {int(m): tuple(c) for m, c in d.get("level2", {}).items()},
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))

    @classmethod
    def load(cls, path) -> "CodeLayout":
        return cls.from_json(json.loads(Path(path).read_text()))


def validate_layout(H: ParityCheckMatrix, graph: ChimeraGraph, layout: CodeLayout) -> None:
    """Raise :class:`PlacementError` unless every structural requirement holds."""
    if layout.L != graph.L:
        raise PlacementError(f"layout is for a {layout.L}x{layout.L} grid, graph is {graph.L}x{graph.L}")
    placed = list(layout.level1) + list(layout.level2)
    missing = set(range(H.M)) - set(placed)
    if missing or len(placed) != len(set(placed)) or any(not 0 <= m < H.M for m in placed):
        raise PlacementError("every check must be placed exactly once", missing)
    bad_degree = [m for m in range(H.M) if len(H.rows[m]) != 3]
    if bad_degree:
        raise PlacementError("only degree-3 checks can be placed", bad_degree)

    bad = []
    used: dict[Cell, int] = {}
    for m, c in layout.level1.items():
        if not (0 <= c[0] < graph.L and 0 <= c[1] < graph.L) or not graph.cell_is_clean(c):
            bad.append(m)
        elif c in used:
            bad += [m, used[c]]
        else:
            used[c] = m
    covered: dict[Cell, int] = {}
    for m, origin in layout.level2.items():
        cells = block_cells(origin)
        if any(not (0 <= x < graph.L and 0 <= y < graph.L) for x, y in cells):
            bad.append(m)
            continue
        if not all(graph.cell_is_clean(c) for c in cells):
            bad.append(m)
        for c in cells:
            if c in covered:
                bad += [m, covered[c]]
            covered[c] = m
    if bad:
        raise PlacementError("cells or ensembles are invalid, defective or overlapping", bad)

    pair_seen: set[tuple[int, int]] = set()
    for n, checks in enumerate(H.cols):
        if len(checks) > 2:
            raise PlacementError(f"bit {n} lies in {len(checks)} checks; at most two are supported", checks)
        if len(checks) < 2:
            continue
        a, b = checks
        if (a, b) in pair_seen:
            bad += [a, b]
            continue
        pair_seen.add((a, b))
        if a in layout.level1 and b in layout.level1:
            ca, cb = layout.level1[a], layout.level1[b]
            if abs(ca[0] - cb[0]) + abs(ca[1] - cb[1]) != 1:
                bad += [a, b]
        elif a in layout.level2 and b in layout.level2:
            bad += [a, b]
        else:
            l1, l2 = (a, b) if a in layout.level1 else (b, a)
            if layout.level1[l1] not in block_cells(layout.level2[l2]):
                bad += [a, b]
    if bad:
        raise PlacementError("shared bits cannot be chained within the length bounds", bad)


def _check_neighbors(H: ParityCheckMatrix) -> list[set[int]]:
    nb = [set() for _ in range(H.M)]
    for checks in H.cols:
        if len(checks) == 2:
            a, b = checks
            nb[a].add(b)
            nb[b].add(a)
    return nb


def _candidate_origins(cells: set[Cell], graph: ChimeraGraph) -> list[Cell]:
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    out = []
    for oy in range(max(ys) - 2, min(ys) + 1):
        for ox in range(max(xs) - 2, min(xs) + 1):
            if 0 <= ox and 0 <= oy and ox + 3 <= graph.L and oy + 3 <= graph.L:
                if all(graph.cell_is_clean(c) for c in block_cells((ox, oy))):
                    out.append((ox, oy))
    return out


def _assign_ensembles(
    H: ParityCheckMatrix, graph: ChimeraGraph, level1: dict[int, Cell], l2_checks: list[int]
) -> dict[int, Cell] | None:
    nb = _check_neighbors(H)
    options = {}
    for m in l2_checks:
        links = {level1[o] for o in nb[m] if o in level1}
        if any(o not in level1 for o in nb[m]):
            return None
        if not links:
            options[m] = _candidate_origins({(1, 1)}, graph)[:1] if graph.L >= 3 else []
        else:
            options[m] = _candidate_origins(links, graph)
        if not options[m]:
            return None
    order = sorted(l2_checks, key=lambda m: len(options[m]))
    chosen: dict[int, Cell] = {}
    taken: set[Cell] = set()

    def rec(i: int) -> bool:
        if i == len(order):
            return True
        m = order[i]
        for origin in options[m]:
            cells = set(block_cells(origin))
            if cells & taken:
                continue
            chosen[m] = origin
            taken.update(cells)
            if rec(i + 1):
                return True
            taken.difference_update(cells)
            del chosen[m]
        return False

    return dict(sorted(chosen.items())) if rec(0) else None


def _canonical(H: ParityCheckMatrix, graph: ChimeraGraph) -> CodeLayout | None:
    """Level-I checks row-major over a bottom-left region, Level-II checks after them."""
    nb = _check_neighbors(H)
    shapes: dict[int, list[list[Cell]]] = {}
    for h in range(1, graph.L + 1):
        for w in range(1, graph.L + 1):
            cells = [(x, y) for y in range(h) for x in range(w) if graph.cell_is_clean((x, y))]
            shapes.setdefault(len(cells), []).append(cells)
    for n2 in range(0, H.M + 1):
        m1 = H.M - n2
        if n2 and graph.L < 3:
            break
        for cells in shapes.get(m1, ()):
            level1 = dict(zip(range(m1), cells))
            if not all(
                abs(level1[m][0] - level1[o][0]) + abs(level1[m][1] - level1[o][1]) == 1
                for m in range(m1)
                for o in nb[m]
                if o < m1
            ):
                continue
            level2 = _assign_ensembles(H, graph, level1, list(range(m1, H.M))) if n2 else {}
            if level2 is None:
                continue
            layout = CodeLayout(graph.L, level1, level2)
            try:
                validate_layout(H, graph, layout)
            except PlacementError:
                continue
            return layout
    return None


def _monomorphism(H: ParityCheckMatrix, graph: ChimeraGraph, max_checks: int) -> CodeLayout | None:
    if H.M > max_checks:
        return None
    check_graph = nx.Graph()
    check_graph.add_nodes_from(range(H.M))
    for m, others in enumerate(_check_neighbors(H)):
        check_graph.add_edges_from((m, o) for o in others)
    grid = nx.Graph()
    clean = [c for c in graph.cells() if graph.cell_is_clean(c)]
    grid.add_nodes_from(clean)
    grid.add_edges_from((c, d) for c in clean for d in graph.neighbors(c) if d in grid)
    if grid.number_of_nodes() < H.M:
        return None
    gm = nx.algorithms.isomorphism.GraphMatcher(grid, check_graph)
    for mapping in gm.subgraph_monomorphisms_iter():
        level1 = {m: c for c, m in mapping.items()}
        return CodeLayout(graph.L, level1, {})
    return None


def place_checks(
    H: ParityCheckMatrix,
    graph: ChimeraGraph,
    layout: CodeLayout | None = None,
    search_limit: int = 40,
) -> CodeLayout:
    """Validate ``layout``, or find one.

    Without a layout the placer first assumes the row order produced by
    :func:`construct_qgem_code` (cells row-major, ensemble checks last), then
    for small codes searches for a grid embedding of the check adjacency
    graph.  Failing both, it raises :class:`PlacementError`.
    """
    clean_cells = sum(graph.cell_is_clean(c) for c in graph.cells())
    if layout is not None:
        validate_layout(H, graph, layout)
        return layout
    bad_degree = [m for m in range(H.M) if len(H.rows[m]) != 3]
    if bad_degree:
        raise PlacementError("only degree-3 checks can be placed", bad_degree)
    if H.M > clean_cells + (graph.L // 3) ** 2:
        raise PlacementError(f"{H.M} checks exceed the grid's capacity", range(clean_cells, H.M))
    crowded = sorted({m for c in H.cols if len(c) > 2 for m in c})
    if crowded:
        raise PlacementError("bits shared by more than two checks cannot be chained", crowded)
    found = _canonical(H, graph) or _monomorphism(H, graph, search_limit)
    if found is None:
        nb = _check_neighbors(H)
        # checks with more partners than any cell can reach are certainly stuck
        suspects = [m for m in range(H.M) if len(nb[m]) > 4] or list(range(H.M))
        raise PlacementError("no placement keeps every shared bit within chain bounds", suspects)
    validate_layout(H, graph, found)
    return found
