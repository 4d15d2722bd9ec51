"""Hardware-native (2,3)-regular codes designed together with their layout.

A nearest-neighbour grid can only host codes whose check adjacency graph is
(almost) planar, so a generic high-girth code does not embed.  Here the code
is built from the layout instead: every cell of a region hosts one check,
some 3x3 ensembles host one extra check each, and the bits are the edges of
a degree-3 subgraph of the cell grid plus three links from each ensemble
check to cells inside its ensemble.  The subgraph is chosen by min-cost flow,
preferring the brick-wall pattern (horizontal edges everywhere, a vertical
edge above every even cell) whose hexagonal faces avoid length-4 cycles.
"""
from __future__ import annotations

import networkx as nx
import numpy as np

from ..ldpc import ParityCheckMatrix
from .graph import Cell, ChimeraGraph
from .placement import CodeLayout, PlacementError, block_cells

__all__ = ["construct_qgem_code", "ensemble_origins"]

_BRICK_COST = 0
_OFF_BRICK_COST = 10
_DANGLE_COST = 1000


def _axis_origins(n: int) -> list[int]:
    xs = list(range(0, n - 2, 3))
    if xs and xs[-1] + 3 < n:
        xs[-1] = n - 3
    return xs


def ensemble_origins(width: int, height: int, count: int) -> list[Cell]:
    """Up to ``count`` disjoint 3x3 blocks tiling the region.

    Corner blocks come first (corner cells have only two grid neighbours and
    need an ensemble link), then border blocks, then interior ones.
    """
    xs, ys = _axis_origins(width), _axis_origins(height)
    cand = [(x, y) for y in ys for x in xs]
    if count > len(cand):
        raise PlacementError(f"a {width}x{height} region holds at most {len(cand)} ensembles")

    def rank(o: Cell) -> int:
        on_x = o[0] in (xs[0], xs[-1])
        on_y = o[1] in (ys[0], ys[-1])
        return 0 if on_x and on_y else 1 if on_x or on_y else 2

    return sorted(cand, key=rank)[:count]


def _patterns(n: int, target: int, evens: list[int], odds: list[int]) -> list[int] | None:
    """Pick e_k (links from even cells) per ensemble with sum(2 e_k - 3) == target."""
    choices = [[e for e in range(4) if e <= evens[k] and 3 - e <= odds[k]] for k in range(n)]
    # prefer balanced patterns (1 or 2 even links)
    for k in range(n):
        choices[k].sort(key=lambda e: (abs(2 * e - 3), -e))
    pick = [c[0] for c in choices]
    diff = target - sum(2 * e - 3 for e in pick)
    k = 0
    while diff != 0 and k < 4 * n:
        i = k % n
        step = 1 if diff > 0 else -1
        if pick[i] + step in choices[i]:
            pick[i] += step
            diff -= 2 * step
        k += 1
    return pick if diff == 0 else None


def _cycles_at(adj: dict, nodes) -> set[frozenset]:
    """Cycles of length 3 and 4 through any of ``nodes``, each as a node set + length tag."""
    out = set()
    for u in nodes:
        for v in adj[u]:
            for w in adj[v]:
                if w == u:
                    continue
                if u in adj[w]:
                    out.add((3, frozenset((u, v, w))))
                for x in adj[w]:
                    if x not in (u, v) and u in adj[x]:
                        out.add((4, frozenset((frozenset((u, w)), frozenset((v, x))))))
    return out


def _score(cycles) -> int:
    return sum(10 if n == 3 else 1 for n, _ in cycles)


def _reduce_short_cycles(edges: list[tuple], allowed, rng, iters: int) -> list[tuple]:
    """Degree-preserving edge swaps that remove 3- and 4-cycles of the check graph."""
    adj: dict = {}
    for a, b in edges:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    nodes = list(adj)
    bad = _cycles_at(adj, nodes)
    for _ in range(iters):
        if not bad:
            break
        _, members = list(bad)[int(rng.integers(len(bad)))]
        cyc_nodes = set()
        for m in members:
            cyc_nodes |= m if isinstance(m, frozenset) else {m}
        a = sorted(cyc_nodes, key=repr)[int(rng.integers(len(cyc_nodes)))]
        b = sorted(adj[a], key=repr)[int(rng.integers(len(adj[a])))]
        # partner edge (c, d) near a
        near = set()
        for v in adj[a]:
            for w in adj[v]:
                near |= {w} | adj[w]
        near -= {a, b}
        near = sorted(near, key=repr)
        if not near:
            continue
        c = near[int(rng.integers(len(near)))]
        opts = sorted(adj[c] - {a, b}, key=repr)
        if not opts:
            continue
        d = opts[int(rng.integers(len(opts)))]
        if b in adj[c] or a in adj[d] or not allowed(a, d) or not allowed(c, b):
            # try the other pairing: (a, c), (b, d)
            if c in adj[a] or d in adj[b] or not allowed(a, c) or not allowed(b, d):
                continue
            new = [(a, c), (b, d)]
        else:
            new = [(a, d), (c, b)]
        touched = {a, b, c, d}
        before = _score(_cycles_at(adj, touched))
        for u, v in ((a, b), (c, d)):
            adj[u].discard(v)
            adj[v].discard(u)
        for u, v in new:
            adj[u].add(v)
            adj[v].add(u)
        after = _score(_cycles_at(adj, touched))
        if after <= before:
            bad = _cycles_at(adj, nodes) if after < before else bad
            if after == before:
                bad = _cycles_at(adj, nodes)
            continue
        for u, v in new:
            adj[u].discard(v)
            adj[v].discard(u)
        for u, v in ((a, b), (c, d)):
            adj[u].add(v)
            adj[v].add(u)
    return sorted({tuple(sorted((u, v), key=repr)) for u in adj for v in adj[u]}, key=repr)


def construct_qgem_code(
    L: int = 16,
    n_level2: int | None = None,
    region: tuple[int, int] | None = None,
    seed: int = 0,
    allow_dangling: bool = False,
    defective=(),
    girth_iters: int = 20000,
) -> tuple[ParityCheckMatrix, CodeLayout]:
    """Build a code that embeds by construction, with its layout.

    ``region`` (width, height) of cells anchored at the bottom-left corner
    defaults to the whole grid; ``n_level2`` defaults to as many ensembles
    as the region holds.  Without ``allow_dangling`` the result is
    (2,3)-regular and construction fails when the degree budget cannot
    balance; with it, missing links become bits that appear in one check.
    Afterwards up to ``girth_iters`` degree-preserving swaps try to remove
    short cycles of the check adjacency graph.
    """
    graph = ChimeraGraph(L, frozenset(defective))
    width, height = region or (L, L)
    if not (1 <= width <= L and 1 <= height <= L):
        raise ValueError("region must fit inside the grid")
    cells = [
        (x, y) for y in range(height) for x in range(width) if graph.cell_is_clean((x, y))
    ]
    cell_set = set(cells)
    origins_all = ensemble_origins(width, height, len(_axis_origins(width)) * len(_axis_origins(height)))
    origins_all = [o for o in origins_all if all(c in cell_set for c in block_cells(o))]
    even = [c for c in cells if (c[0] + c[1]) % 2 == 0]
    odd = [c for c in cells if (c[0] + c[1]) % 2 == 1]
    target = 3 * (len(even) - len(odd))

    def plan(n: int):
        ev_in = [sum((c[0] + c[1]) % 2 == 0 for c in block_cells(o)) for o in origins_all[:n]]
        return _patterns(n, target, ev_in, [9 - e for e in ev_in]) if n else []

    if n_level2 is None:
        # largest ensemble count whose links can balance the bipartite degree budget
        n_level2 = next(
            (n for n in range(len(origins_all), -1, -1) if plan(n) is not None and (n or not target)),
            0,
        )
    if n_level2 > len(origins_all):
        raise PlacementError(f"region holds only {len(origins_all)} defect-free ensembles")
    origins = origins_all[:n_level2]
    pattern = plan(n_level2)
    if pattern is None or (not n_level2 and target != 0):
        if not allow_dangling:
            raise PlacementError(
                "degree budget cannot balance for a regular code; try allow_dangling=True "
                "or a different region/ensemble count"
            )
        if pattern is None:
            pattern = [2 if (k % 2 == 0) else 1 for k in range(n_level2)]

    rng = np.random.default_rng(seed)
    G = nx.DiGraph()
    for c in even:
        G.add_node(("cell", c), demand=-3)
    for c in odd:
        G.add_node(("cell", c), demand=3)
    for c in even:
        x, y = c
        for d in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)]:
            if d in cell_set:
                brick = d[1] == y or d == (x, y + 1)
                cost = (_BRICK_COST if brick else _OFF_BRICK_COST) + int(rng.integers(0, 3))
                G.add_edge(("cell", c), ("cell", d), capacity=1, weight=cost)
    balance = -3 * len(even) + 3 * len(odd)
    for k, (o, e_k) in enumerate(zip(origins, pattern)):
        G.add_node(("in", k), demand=e_k)
        G.add_node(("out", k), demand=-(3 - e_k))
        balance += e_k - (3 - e_k)
        for c in block_cells(o):
            if (c[0] + c[1]) % 2 == 0:
                G.add_edge(("cell", c), ("in", k), capacity=1, weight=int(rng.integers(0, 3)))
            else:
                G.add_edge(("out", k), ("cell", c), capacity=1, weight=int(rng.integers(0, 3)))
    if allow_dangling:
        G.add_node("dangle", demand=-balance)
        for c in even:
            G.add_edge(("cell", c), "dangle", capacity=3, weight=_DANGLE_COST)
        for c in odd:
            G.add_edge("dangle", ("cell", c), capacity=3, weight=_DANGLE_COST)
    elif balance != 0:
        raise PlacementError("degree budget does not balance")

    try:
        flow = nx.min_cost_flow(G)
    except nx.NetworkXUnfeasible as exc:
        raise PlacementError(f"no degree-3 link pattern exists for this region: {exc}") from exc

    check_of = {c: m for m, c in enumerate(cells)}
    l2_id = {k: len(cells) + k for k in range(n_level2)}
    pairs: list[tuple] = []
    dangling: list[tuple[int, ...]] = []
    for u, targets in flow.items():
        for v, f in targets.items():
            if f == 0:
                continue
            if u == "dangle":
                dangling += [(check_of[v[1]],)] * f
            elif v == "dangle":
                dangling += [(check_of[u[1]],)] * f
            elif u[0] == "cell" and v[0] == "cell":
                pairs.append((("c", u[1]), ("c", v[1])))
            elif v[0] == "in":
                pairs.append((("c", u[1]), ("e", v[1])))
            else:
                pairs.append((("c", v[1]), ("e", u[1])))

    blocks = {k: set(block_cells(o)) for k, o in enumerate(origins)}

    def allowed(p, q) -> bool:
        if p[0] == "c" and q[0] == "c":
            return abs(p[1][0] - q[1][0]) + abs(p[1][1] - q[1][1]) == 1
        if p[0] == "e" and q[0] == "e":
            return False
        cell, ens = (p[1], q[1]) if p[0] == "c" else (q[1], p[1])
        return cell in blocks[ens]

    if girth_iters:
        pairs = _reduce_short_cycles(pairs, allowed, rng, girth_iters)

    def check_id(node) -> int:
        return check_of[node[1]] if node[0] == "c" else l2_id[node[1]]

    bits = dangling + [tuple(sorted((check_id(p), check_id(q)))) for p, q in pairs]
    bits.sort()
    M = len(cells) + n_level2
    rows: list[list[int]] = [[] for _ in range(M)]
    for n, checks in enumerate(bits):
        for m in checks:
            rows[m].append(n)
    H = ParityCheckMatrix(M, len(bits), tuple(tuple(r) for r in rows))
    layout = CodeLayout(
        L,
        {m: c for c, m in check_of.items()},
        {l2_id[k]: o for k, o in enumerate(origins)},
    )
    return H, layout
