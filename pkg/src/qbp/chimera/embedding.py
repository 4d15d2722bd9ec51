"""End-to-end embedding of a decoding problem onto Chimera, plus verification
and chain repair."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from ..ldpc import ParityCheckMatrix
from ..qubo import AncillaPlan, Convention, QuadraticBinaryProblem, qubo_to_ising
from . import schemas
from .graph import Cell, ChimeraGraph
from .placement import CodeLayout, PlacementError, block_cells, place_checks

__all__ = [
    "ChimeraEmbedding",
    "EmbeddingError",
    "EmbeddingReport",
    "HardwareProblem",
    "build_embedding",
    "build_hardware_problem",
    "capacity",
    "embed_code",
    "extend_to_physical",
    "level2_embed",
    "unembed",
    "verify_embedding",
]

LEVEL1_MAX_CHAIN = 4
LEVEL2_MAX_CHAIN = 9


class EmbeddingError(RuntimeError):
    pass


def capacity(n_qubits: int) -> int:
    """Largest block length a machine with ``n_qubits`` qubits can host (5 N_Q / 24)."""
    if n_qubits < 0:
        raise ValueError("qubit count must be non-negative")
    return 5 * n_qubits // 24


@dataclass(frozen=True)
class ChimeraEmbedding:
    L: int
    chains: dict[int, tuple[int, ...]]
    jferro: float
    level: dict[int, int]
    schema: dict[Cell, str]
    layout: CodeLayout
    tie_bias: dict[int, float] = field(default_factory=dict)

    @property
    def num_qubits_used(self) -> int:
        return sum(len(c) for c in self.chains.values())

    def chain_length_histogram(self) -> dict[int, dict[int, int]]:
        hist: dict[int, dict[int, int]] = {1: {}, 2: {}}
        for v, c in self.chains.items():
            h = hist[self.level[v]]
            h[len(c)] = h.get(len(c), 0) + 1
        return hist

    def to_json(self) -> dict:
        return {
            "topology": {"chimera": self.L},
            "jferro": self.jferro,
            "chains": {str(v): list(c) for v, c in sorted(self.chains.items())},
            "level": {str(v): lv for v, lv in sorted(self.level.items())},
            "schema": {f"{x},{y}": t for (x, y), t in sorted(self.schema.items())},
            "placement": self.layout.to_json(),
            "tie_bias": {str(v): b for v, b in sorted(self.tie_bias.items())},
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "ChimeraEmbedding":
        return cls(
            int(d["topology"]["chimera"]),
            {int(v): tuple(c) for v, c in d["chains"].items()},
            float(d["jferro"]),
            {int(v): int(lv) for v, lv in d["level"].items()},
            {tuple(int(t) for t in k.split(",")): s for k, s in d["schema"].items()},
            CodeLayout.from_json(d["placement"]),
            {int(v): float(b) for v, b in d.get("tie_bias", {}).items()},
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json())


@dataclass(frozen=True, eq=False)
class HardwareProblem:
    """Normalized Ising problem on the used physical qubits.

    ``problem`` is indexed by position in ``qubits``; chain couplers equal -1.
    For chain-uniform states the energy equals the logical Ising energy divided
    by |J_F| plus ``chain_constant``.
    """

    L: int
    qubits: tuple[int, ...]
    problem: QuadraticBinaryProblem
    chain_constant: float
    jferro: float

    @property
    def bias(self) -> dict[int, float]:
        return {self.qubits[i]: h for i, h in self.problem.linear.items()}

    @property
    def coupling(self) -> dict[tuple[int, int], float]:
        q = self.qubits
        return {(q[i], q[j]): J for (i, j), J in self.problem.quadratic.items()}

    def index(self) -> dict[int, int]:
        return {q: i for i, q in enumerate(self.qubits)}

    def energy(self, sample) -> float | np.ndarray:
        """Energy of spins given in ``qubits`` order (vector or matrix) or as a mapping."""
        if isinstance(sample, Mapping):
            sample = [sample[q] for q in self.qubits]
        return self.problem.energy(sample)

    def to_json(self) -> dict:
        d = self.problem.to_json()
        d["topology"] = {"chimera": self.L}
        d["qubits"] = list(self.qubits)
        d["chain_constant"] = self.chain_constant
        d["jferro"] = self.jferro
        return d


def _ancilla_plan(H: ParityCheckMatrix, problem: QuadraticBinaryProblem | None) -> AncillaPlan:
    if problem is not None and problem.ancilla_plan is not None:
        return problem.ancilla_plan
    starts, nxt = [], H.N
    for _ in range(H.M):
        starts.append(nxt)
        nxt += 1
    return AncillaPlan(H.N, tuple(starts), (1,) * H.M)


def _solutions(local, avail):
    """Ensemble chain layouts; roles without a link cell may reach any cell."""
    if all(c is not None for c in local):
        yield from schemas.level2_solutions(local, avail)
        return
    seen = set()
    every = [(i, j) for j in range(3) for i in range(3)]
    opts = [[c] if c is not None else every for c in local]
    for combo in itertools.product(*opts):
        if len(set(combo)) < 3:
            continue
        for sol in itertools.islice(schemas.level2_solutions(combo, avail), 4):
            if sol not in seen:
                seen.add(sol)
                yield sol


def level2_embed(
    check_vars: Sequence[int],
    origin: Cell,
    graph: ChimeraGraph,
    link_cells: Sequence[Cell | None],
    occupied=frozenset(),
    skip: int = 0,
) -> dict[int, tuple[int, ...]]:
    """Chains for the variables (a, b, c, e) of a check hosted by an ensemble.

    Chains use only the idle qubits of the nine cells; bit ``i`` must reach
    ``link_cells[i]`` (None leaves it free).  ``skip`` selects a later
    solution when an earlier one conflicts with cell pins.
    """
    if len(check_vars) != 4 or len(link_cells) != 3:
        raise schemas.SchemaError("an ensemble check needs three bits and one ancilla")
    avail = schemas.ensemble_available(origin, graph)
    idle = schemas.ensemble_qubits(avail, origin, graph)
    clash = sorted(set(idle) & set(occupied))
    if clash:
        raise schemas.SchemaError(f"idle qubits {clash} of ensemble {origin} are already in use")
    local = []
    for c in link_cells:
        if c is not None and c not in block_cells(origin):
            raise schemas.SchemaError(f"link cell {c} lies outside ensemble {origin}")
        local.append(None if c is None else (c[0] - origin[0], c[1] - origin[1]))
    sol = next(itertools.islice(_solutions(tuple(local), avail), skip, None), None)
    if sol is None:
        raise schemas.SchemaError("no ensemble chain layout satisfies the links")
    return {v: schemas.ensemble_qubits(m, origin, graph) for v, m in zip(check_vars, sol)}


def build_embedding(
    H: ParityCheckMatrix,
    graph: ChimeraGraph,
    layout: CodeLayout,
    plan: AncillaPlan | None = None,
    jferro: float = 8.0,
    max_level2_tries: int = 200,
) -> ChimeraEmbedding:
    """Chains for every bit and ancilla of ``H`` under ``layout``."""
    plan = plan or _ancilla_plan(H, None)
    if any(c != 1 for c in plan.counts):
        raise EmbeddingError("every check must own exactly one ancilla")
    check_in = layout.cell_of()

    def check_vars(m: int) -> list[int]:
        return list(H.rows[m]) + [plan.starts[m]]

    pins: dict[Cell, dict[int, list[schemas.Pin]]] = {c: {} for c in layout.level1.values()}
    for n, checks in enumerate(H.cols):
        if len(checks) == 2 and all(m in layout.level1 for m in checks):
            c1, c2 = (layout.level1[m] for m in checks)
            k = schemas.link_k(c1, c2)
            pins[c1].setdefault(n, []).append(schemas.Pin(k=k))
            pins[c2].setdefault(n, []).append(schemas.Pin(k=k))

    parts: dict[int, list[int]] = {}
    level: dict[int, int] = {}
    solved: dict[Cell, dict[int, tuple[int, ...]]] = {}

    for m, origin in sorted(layout.level2.items()):
        links: list[Cell | None] = []
        for n in H.rows[m]:
            other = [o for o in H.cols[n] if o != m]
            links.append(layout.level1[other[0]] if other else None)
        avail = schemas.ensemble_available(origin, graph)
        local = tuple(None if c is None else (c[0] - origin[0], c[1] - origin[1]) for c in links)
        for i, sol in enumerate(_solutions(local, avail)):
            if i >= max_level2_tries:
                raise EmbeddingError(f"ensemble check {m} at {origin}: link pins unsatisfiable")
            trial: dict[Cell, dict[int, tuple[int, ...]]] = {}
            trial_pins: dict[Cell, dict[int, list[schemas.Pin]]] = {}
            try:
                for n, c, lc, mask in zip(H.rows[m], links, local, sol):
                    if c is None:
                        continue
                    cell_pins = {v: list(p) for v, p in pins[c].items()}
                    pin = schemas.link_side_pin(mask, lc)
                    if pin is not None:
                        cell_pins.setdefault(n, []).append(pin)
                    trial[c] = schemas.solve_cell(check_vars(check_in[c]), c, cell_pins)
                    trial_pins[c] = cell_pins
            except schemas.SchemaError:
                continue
            solved.update(trial)
            pins.update(trial_pins)
            for v, mask in zip(check_vars(m), sol):
                parts.setdefault(v, []).extend(schemas.ensemble_qubits(mask, origin, graph))
                level[v] = 2
            break
        else:
            raise EmbeddingError(f"ensemble check {m} at {origin} has no chain layout")

    for m, c in sorted(layout.level1.items()):
        if not graph.cell_is_clean(c):
            raise EmbeddingError(f"cell {c} contains a defective qubit")
        if c not in solved:
            try:
                solved[c] = schemas.solve_cell(check_vars(m), c, pins[c])
            except schemas.SchemaError as exc:
                raise EmbeddingError(str(exc)) from exc
        for v, ks in solved[c].items():
            parts.setdefault(v, []).extend(graph.qubit(c[0], c[1], k) for k in ks)
            level.setdefault(v, 1)

    chains = {v: tuple(sorted(set(qs))) for v, qs in sorted(parts.items())}
    schema = {c: "unused" for c in graph.cells()}
    for origin in layout.level2.values():
        for c in block_cells(origin):
            schema[c] = "level2"
    for c in layout.level1.values():
        schema[c] = schemas.schema_type(c)
    return ChimeraEmbedding(graph.L, chains, float(jferro), level, schema, layout)


def build_hardware_problem(
    problem: QuadraticBinaryProblem, embedding: ChimeraEmbedding, graph: ChimeraGraph
) -> HardwareProblem:
    """Spread the logical Ising problem over chains and divide by |J_F|."""
    ising = qubo_to_ising(problem)
    jf = embedding.jferro
    if jf <= 0:
        raise ValueError("chain strength must be positive")
    _, _, qv = ising.couplers
    if len(qv) and np.abs(qv).max() > jf + 1e-12:
        raise ValueError(
            f"|J_F|={jf} is below the largest logical coupler {np.abs(qv).max()}; "
            "normalized couplers would leave [-1, 1]"
        )
    missing = [v for v in range(ising.num_vars) if v not in embedding.chains]
    if missing:
        raise EmbeddingError(f"variables without chains: {missing[:10]}")
    qubits = tuple(sorted(q for c in embedding.chains.values() for q in c))
    idx = {q: i for i, q in enumerate(qubits)}
    lin: list[tuple[int, float]] = []
    quad: list[tuple[int, int, float]] = []
    for v, chain in embedding.chains.items():
        share = ising.linear.get(v, 0.0) / len(chain) / jf
        lin += [(idx[q], share) for q in chain]
    n_chain = 0
    for chain in embedding.chains.values():
        for a, u in enumerate(chain):
            for w in chain[a + 1 :]:
                if graph.has_coupler(u, w):
                    quad.append((idx[u], idx[w], -1.0))
                    n_chain += 1
    for (u, v), J in ising.quadratic.items():
        if J == 0.0:
            continue
        link = next(
            (
                (a, b)
                for a in embedding.chains[u]
                for b in embedding.chains[v]
                if graph.has_coupler(a, b)
            ),
            None,
        )
        if link is None:
            raise EmbeddingError(f"no physical coupler joins the chains of {u} and {v}")
        quad.append((idx[link[0]], idx[link[1]], J / jf))
    hw = QuadraticBinaryProblem.from_terms(
        len(qubits), lin, quad, ising.offset / jf, Convention.ISING
    )
    return HardwareProblem(graph.L, qubits, hw, -float(n_chain), jf)


@dataclass
class EmbeddingReport:
    ok: bool
    violations: list[str]
    qubits_used: int
    max_chain: dict[int, int]

    def __bool__(self) -> bool:
        return self.ok


def verify_embedding(
    embedding: ChimeraEmbedding, problem: QuadraticBinaryProblem, graph: ChimeraGraph
) -> EmbeddingReport:
    """Connectivity, disjointness, coupler coverage, chain bounds and qubit accounting."""
    v_out: list[str] = []
    owner: dict[int, int] = {}
    for v, chain in embedding.chains.items():
        if not chain:
            v_out.append(f"variable {v}: empty chain")
            continue
        for q in chain:
            if q not in graph.qubits:
                v_out.append(f"variable {v}: qubit {q} missing or defective")
            if q in owner:
                v_out.append(f"qubit {q} shared by variables {owner[q]} and {v}")
            owner[q] = v
        seen = {chain[0]}
        stack = [chain[0]]
        members = set(chain)
        while stack:
            u = stack.pop()
            for w in graph.adjacency.get(u, ()):
                if w in members and w not in seen:
                    seen.add(w)
                    stack.append(w)
        if seen != members:
            v_out.append(f"variable {v}: chain is disconnected")
        bound = LEVEL2_MAX_CHAIN if embedding.level.get(v, 1) == 2 else LEVEL1_MAX_CHAIN
        if len(chain) > bound:
            v_out.append(f"variable {v}: chain of {len(chain)} exceeds bound {bound}")
    for v in range(problem.num_vars):
        if v not in embedding.chains:
            v_out.append(f"variable {v}: no chain")
    for (u, v), J in problem.quadratic.items():
        if J == 0.0 or u not in embedding.chains or v not in embedding.chains:
            continue
        if not any(
            graph.has_coupler(a, b) for a in embedding.chains[u] for b in embedding.chains[v]
        ):
            v_out.append(f"coupler ({u}, {v}): no physical coupler between chains")
    used = len(owner)
    if used > graph.num_qubits:
        v_out.append(f"{used} qubits used on a {graph.num_qubits}-qubit graph")
    max_chain = {1: 0, 2: 0}
    for v, chain in embedding.chains.items():
        lv = embedding.level.get(v, 1)
        max_chain[lv] = max(max_chain[lv], len(chain))
    return EmbeddingReport(not v_out, v_out, used, max_chain)


def embed_code(
    problem: QuadraticBinaryProblem,
    H: ParityCheckMatrix,
    graph: ChimeraGraph,
    jferro: float = 8.0,
    layout: CodeLayout | None = None,
) -> tuple[ChimeraEmbedding, HardwareProblem]:
    """Place, embed, normalize and verify a decoding problem built from ``H``."""
    plan = _ancilla_plan(H, problem)
    if problem.num_vars != plan.num_bits + plan.num_ancillas or plan.num_bits != H.N:
        raise EmbeddingError("problem variables do not match the code and its ancillas")
    if H.M > len(graph.cells()) + (graph.L // 3) ** 2:
        raise PlacementError(f"{H.M} checks exceed the capacity of a {graph.L}x{graph.L} grid")
    layout = place_checks(H, graph, layout)
    emb = build_embedding(H, graph, layout, plan, jferro)
    ising = qubo_to_ising(problem)
    emb = replace(emb, tie_bias={v: ising.linear[v] for v in range(ising.num_vars)})
    report = verify_embedding(emb, problem, graph)
    if not report.ok:
        raise EmbeddingError("embedding failed verification: " + "; ".join(report.violations[:10]))
    return emb, build_hardware_problem(problem, emb, graph)


# --- sample conversion --------------------------------------------------------


def _chain_index(embedding: ChimeraEmbedding, order: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    pos = {q: i for i, q in enumerate(order)}
    n = max(embedding.chains) + 1 if embedding.chains else 0
    width = max((len(c) for c in embedding.chains.values()), default=0)
    idx = np.zeros((n, width), dtype=np.int64)
    mask = np.zeros((n, width), dtype=bool)
    for v, chain in embedding.chains.items():
        if not chain:
            raise ValueError(f"variable {v} has an empty chain")
        idx[v, : len(chain)] = [pos[q] for q in chain]
        mask[v, : len(chain)] = True
    return idx, mask


def extend_to_physical(logical, embedding: ChimeraEmbedding, qubit_order: Sequence[int]) -> np.ndarray:
    """Copy each logical spin onto every qubit of its chain."""
    logical = np.asarray(logical)
    single = logical.ndim == 1
    logical = np.atleast_2d(logical)
    pos = {q: i for i, q in enumerate(qubit_order)}
    out = np.zeros((logical.shape[0], len(qubit_order)), dtype=logical.dtype)
    for v, chain in embedding.chains.items():
        for q in chain:
            out[:, pos[q]] = logical[:, v]
    return out[0] if single else out


def unembed(
    sample,
    embedding: ChimeraEmbedding,
    policy: str = "majority",
    tie_rule: str = "bias",
    qubit_order: Sequence[int] | None = None,
) -> tuple[np.ndarray, np.ndarray | int]:
    """Logical spins from physical spins, with majority vote over broken chains.

    ``sample`` holds spins in ``qubit_order`` (default: physical id order), as a
    vector, a matrix of reads, or a mapping qubit -> spin.  Even-length ties
    go to the spin the variable's own Ising bias prefers (-1 when h > 0,
    +1 when h < 0) and to -1 (bit 0) when the bias is zero or tie_rule is
    "zero".  Returns the logical spins and the broken-chain count per read.
    """
    if policy != "majority":
        raise ValueError(f"unknown policy {policy!r}")
    if tie_rule not in ("bias", "zero"):
        raise ValueError(f"unknown tie rule {tie_rule!r}")
    if isinstance(sample, Mapping):
        order = sorted(sample)
        sample = np.array([sample[q] for q in order])
        qubit_order = order
    x = np.asarray(sample)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if qubit_order is None:
        qubit_order = range(x.shape[1])
    idx, mask = _chain_index(embedding, qubit_order)
    vals = np.where(mask[None], x[:, idx], 0)
    total = vals.sum(axis=2)
    length = mask.sum(axis=1)
    broken = np.abs(total) < length[None]
    out = np.sign(total).astype(np.int8)
    ties = out == 0
    if ties.any():
        n = idx.shape[0]
        pref = np.full(n, -1, dtype=np.int8)
        if tie_rule == "bias":
            for v, h in embedding.tie_bias.items():
                if v < n and h < 0:
                    pref[v] = 1
        out = np.where(ties, pref[None], out)
    n_broken = broken.sum(axis=1)
    if single:
        return out[0], int(n_broken[0])
    return out, n_broken
