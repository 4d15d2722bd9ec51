"""Decoding as quadratic binary optimization.

The objective is ``W1 * satisfier + W2 * distance``.  The satisfier adds one
squared penalty ``(sum of check bits - 2 * L_e)^2`` per check, where ``L_e`` is
a binary-weighted integer held in ancilla variables; it vanishes exactly when
the check has even parity and the ancillas encode half the bit sum.  The
distance term pulls each bit toward its channel posterior.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .ldpc import ParityCheckMatrix, encode, generator, syndrome

__all__ = [
    "AncillaPlan",
    "BandReport",
    "Convention",
    "ObjectiveWeights",
    "QuadraticBinaryProblem",
    "ancilla_count",
    "assemble_objective",
    "build_decoding_problem",
    "build_distance",
    "build_satisfier",
    "energy",
    "energy_bands",
    "ice_perturb",
    "ml_safe_w2",
    "ising_to_qubo",
    "minimize_ancillas",
    "qubo_to_ising",
]


class Convention(str, Enum):
    QUBO = "QUBO"
    ISING = "ISING"

    @property
    def values(self) -> tuple[int, int]:
        return (0, 1) if self is Convention.QUBO else (-1, 1)


@dataclass(frozen=True)
class AncillaPlan:
    """Ancilla layout: check ``m`` owns ids ``starts[m] .. starts[m] + counts[m] - 1``.

    The s-th ancilla of a check (s = 0, 1, ...) carries weight ``2**s``.
    """

    num_bits: int
    starts: tuple[int, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        spans = sorted(zip(self.starts, self.counts))
        prev_end = self.num_bits
        for start, count in spans:
            if start < prev_end:
                raise ValueError("ancilla ranges overlap each other or the bit range")
            prev_end = start + count

    @property
    def num_checks(self) -> int:
        return len(self.starts)

    @property
    def num_ancillas(self) -> int:
        return sum(self.counts)

    def ancillas(self, m: int) -> range:
        return range(self.starts[m], self.starts[m] + self.counts[m])

    def weights(self, m: int) -> list[int]:
        return [1 << s for s in range(self.counts[m])]

    def to_json(self) -> dict:
        return {"num_bits": self.num_bits, "starts": list(self.starts), "counts": list(self.counts)}

    @classmethod
    def from_json(cls, d: Mapping) -> "AncillaPlan":
        return cls(int(d["num_bits"]), tuple(d["starts"]), tuple(d["counts"]))


@dataclass(frozen=True, eq=False)
class QuadraticBinaryProblem:
    """``sum h_i x_i + sum_{i<j} J_ij x_i x_j + offset`` over ``x`` in {0,1} or {-1,+1}."""

    num_vars: int
    linear: Mapping[int, float]
    quadratic: Mapping[tuple[int, int], float]
    offset: float = 0.0
    convention: Convention = Convention.QUBO
    ancilla_plan: AncillaPlan | None = field(default=None)

    def __post_init__(self):
        n = self.num_vars
        lin = {i: 0.0 for i in range(n)}
        for i, h in self.linear.items():
            i = int(i)
            if not 0 <= i < n:
                raise ValueError(f"linear term on unknown variable {i}")
            lin[i] = float(h)
        quad: dict[tuple[int, int], float] = {}
        for (i, j), J in self.quadratic.items():
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-coupling on variable {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"coupler ({i}, {j}) references an unknown variable")
            key = (i, j) if i < j else (j, i)
            if key in quad:
                raise ValueError(f"coupler {key} given twice")
            quad[key] = float(J)
        vals = list(lin.values()) + list(quad.values()) + [float(self.offset)]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", dict(sorted(quad.items())))
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "convention", Convention(self.convention))

    @classmethod
    def from_terms(
        cls,
        num_vars: int,
        linear: Iterable[tuple[int, float]] = (),
        quadratic: Iterable[tuple[int, int, float]] = (),
        offset: float = 0.0,
        convention: Convention = Convention.QUBO,
        ancilla_plan: AncillaPlan | None = None,
    ) -> "QuadraticBinaryProblem":
        """Like the constructor but accumulates repeated terms."""
        lin: dict[int, float] = {}
        for i, h in linear:
            lin[i] = lin.get(i, 0.0) + h
        quad: dict[tuple[int, int], float] = {}
        for i, j, J in quadratic:
            key = (i, j) if i < j else (j, i)
            quad[key] = quad.get(key, 0.0) + J
        return cls(num_vars, lin, quad, offset, convention, ancilla_plan)

    # array views used by the samplers and vectorized energy
    @cached_property
    def h(self) -> np.ndarray:
        return np.array([self.linear[i] for i in range(self.num_vars)], dtype=float)

    @cached_property
    def couplers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.quadratic:
            e = np.zeros(0, dtype=np.int64)
            return e, e.copy(), np.zeros(0)
        keys = np.array(list(self.quadratic), dtype=np.int64)
        return keys[:, 0].copy(), keys[:, 1].copy(), np.array(list(self.quadratic.values()))

    def with_plan(self, plan: AncillaPlan | None) -> "QuadraticBinaryProblem":
        return QuadraticBinaryProblem(
            self.num_vars, self.linear, self.quadratic, self.offset, self.convention, plan
        )

    def scaled(self, factor: float) -> "QuadraticBinaryProblem":
        return QuadraticBinaryProblem(
            self.num_vars,
            {i: factor * h for i, h in self.linear.items()},
            {k: factor * J for k, J in self.quadratic.items()},
            factor * self.offset,
            self.convention,
            self.ancilla_plan,
        )

    def allclose(self, other: "QuadraticBinaryProblem", atol: float = 1e-12) -> bool:
        if self.num_vars != other.num_vars or self.convention != other.convention:
            return False
        if not np.allclose(self.h, other.h, rtol=0, atol=atol):
            return False
        if abs(self.offset - other.offset) > atol:
            return False
        keys = set(self.quadratic) | set(other.quadratic)
        return all(
            abs(self.quadratic.get(k, 0.0) - other.quadratic.get(k, 0.0)) <= atol for k in keys
        )

    def energy(self, assignment) -> float | np.ndarray:
        return energy(self, assignment)

    def to_json(self) -> dict:
        return {
            "convention": self.convention.value,
            "num_vars": self.num_vars,
            "linear": [[i, h] for i, h in self.linear.items() if h != 0.0],
            "quadratic": [[i, j, J] for (i, j), J in self.quadratic.items()],
            "offset": self.offset,
            "ancilla_plan": self.ancilla_plan.to_json() if self.ancilla_plan else None,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "QuadraticBinaryProblem":
        plan = d.get("ancilla_plan")
        return cls(
            int(d["num_vars"]),
            {int(i): float(h) for i, h in d["linear"]},
            {(int(i), int(j)): float(J) for i, j, J in d["quadratic"]},
            float(d.get("offset", 0.0)),
            Convention(d["convention"]),
            AncillaPlan.from_json(plan) if plan else None,
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _as_matrix(problem: QuadraticBinaryProblem, assignment) -> tuple[np.ndarray, bool]:
    if isinstance(assignment, Mapping):
        missing = [i for i in range(problem.num_vars) if i not in assignment]
        if missing:
            raise ValueError(f"assignment is missing variables {missing[:10]}")
        assignment = [assignment[i] for i in range(problem.num_vars)]
    x = np.asarray(assignment)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != problem.num_vars:
        raise ValueError(f"assignment covers {x.shape[1]} variables, problem has {problem.num_vars}")
    lo, hi = problem.convention.values
    if not np.isin(x, (lo, hi)).all():
        raise ValueError(f"values must be in {{{lo}, {hi}}} for {problem.convention.value}")
    return x.astype(float), single


def energy(problem: QuadraticBinaryProblem, assignment) -> float | np.ndarray:
    """Energy of one assignment (vector or mapping) or of each row of a matrix."""
    x, single = _as_matrix(problem, assignment)
    qi, qj, qv = problem.couplers
    e = x @ problem.h + (x[:, qi] * x[:, qj]) @ qv + problem.offset
    return float(e[0]) if single else e


def qubo_to_ising(problem: QuadraticBinaryProblem) -> QuadraticBinaryProblem:
    if problem.convention is Convention.ISING:
        return problem
    h = problem.h / 2.0
    qi, qj, qv = problem.couplers
    np.add.at(h, qi, qv / 4.0)
    np.add.at(h, qj, qv / 4.0)
    offset = problem.offset + problem.h.sum() / 2.0 + qv.sum() / 4.0
    return QuadraticBinaryProblem(
        problem.num_vars,
        dict(enumerate(h.tolist())),
        {k: J / 4.0 for k, J in problem.quadratic.items()},
        offset,
        Convention.ISING,
        problem.ancilla_plan,
    )


def ising_to_qubo(problem: QuadraticBinaryProblem) -> QuadraticBinaryProblem:
    if problem.convention is Convention.QUBO:
        return problem
    h = 2.0 * problem.h
    qi, qj, qv = problem.couplers
    np.add.at(h, qi, -2.0 * qv)
    np.add.at(h, qj, -2.0 * qv)
    offset = problem.offset - problem.h.sum() + qv.sum()
    return QuadraticBinaryProblem(
        problem.num_vars,
        dict(enumerate(h.tolist())),
        {k: 4.0 * J for k, J in problem.quadratic.items()},
        offset,
        Convention.QUBO,
        problem.ancilla_plan,
    )


# --- objective pieces -------------------------------------------------------


def ancilla_count(d: int) -> int:
    """Fewest ancillas t with 2**(t+1) - 2 >= d - (d mod 2)."""
    if d < 2:
        raise ValueError(f"check degree must be >= 2, got {d}")
    target = d - (d % 2)
    t = 0
    while 2 ** (t + 1) - 2 < target:
        t += 1
    return t


@dataclass(frozen=True)
class ObjectiveWeights:
    W1: float = 1.0
    W2: float = 1.0

    def __post_init__(self):
        if not self.W1 > 0:
            raise ValueError("W1 must be > 0")
        if not self.W2 >= 0:
            raise ValueError("W2 must be >= 0")


def build_satisfier(H: ParityCheckMatrix) -> tuple[QuadraticBinaryProblem, AncillaPlan]:
    starts, counts = [], []
    nxt = H.N
    lin: list[tuple[int, float]] = []
    quad: list[tuple[int, int, float]] = []
    for m, row in enumerate(H.rows):
        d = len(row)
        if d < 2:
            raise ValueError(f"check {m} has degree {d}; the satisfier needs degree >= 2")
        t = ancilla_count(d)
        assert d // 2 <= 2**t - 1, "ancilla range cannot hold the half-sum"
        starts.append(nxt)
        counts.append(t)
        # (sum_v c_v x_v)^2 with x^2 = x: linear c_v^2, pairwise 2 c_u c_v
        terms = [(j, 1.0) for j in row] + [(nxt + s, -2.0 * (1 << s)) for s in range(t)]
        nxt += t
        for a, (u, cu) in enumerate(terms):
            lin.append((u, cu * cu))
            for v, cv in terms[a + 1 :]:
                quad.append((u, v, 2.0 * cu * cv))
    plan = AncillaPlan(H.N, tuple(starts), tuple(counts))
    return QuadraticBinaryProblem.from_terms(nxt, lin, quad, 0.0, Convention.QUBO, plan), plan


def build_distance(p) -> QuadraticBinaryProblem:
    """Sum of (q_i - p_i)^2: bias 1 - 2 p_i per bit, constant sum p_i^2."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any((p < 0) | (p > 1)) or not np.isfinite(p).all():
        raise ValueError("posterior probabilities must lie in [0, 1]")
    return QuadraticBinaryProblem(
        len(p), dict(enumerate((1.0 - 2.0 * p).tolist())), {}, float(np.sum(p * p))
    )


def assemble_objective(
    satisfier: QuadraticBinaryProblem,
    distance: QuadraticBinaryProblem,
    weights: ObjectiveWeights,
) -> QuadraticBinaryProblem:
    plan = satisfier.ancilla_plan
    if satisfier.convention is not Convention.QUBO or distance.convention is not Convention.QUBO:
        raise ValueError("assemble_objective expects QUBO-convention inputs")
    if plan is not None and distance.num_vars != plan.num_bits:
        raise ValueError(
            f"distance covers {distance.num_vars} variables but the satisfier has "
            f"{plan.num_bits} bits; ids would collide with ancillas"
        )
    if distance.quadratic:
        raise ValueError("distance term must be purely linear")
    n = max(satisfier.num_vars, distance.num_vars)
    lin = [(i, weights.W1 * h) for i, h in satisfier.linear.items()]
    lin += [(i, weights.W2 * h) for i, h in distance.linear.items()]
    quad = [(i, j, weights.W1 * J) for (i, j), J in satisfier.quadratic.items()]
    offset = weights.W1 * satisfier.offset + weights.W2 * distance.offset
    return QuadraticBinaryProblem.from_terms(n, lin, quad, offset, Convention.QUBO, plan)


def build_decoding_problem(
    H: ParityCheckMatrix, p, weights: ObjectiveWeights
) -> QuadraticBinaryProblem:
    sat, _ = build_satisfier(H)
    return assemble_objective(sat, build_distance(p), weights)


def ml_safe_w2(p, W1: float = 1.0, margin: float = 0.5) -> float:
    """A W2 small enough that every codeword beats every invalid word.

    An invalid word pays at least W1 in the satisfier while the distance term
    of any two words differs by at most sum |2 p_i - 1| <= N max |2 p_i - 1|,
    so any W2 below W1 / (N max |2 p_i - 1|) leaves the minimum-distance
    codeword as ground state.  ``margin`` scales that bound.
    """
    p = np.asarray(p, dtype=float)
    if not 0 < margin < 1:
        raise ValueError("margin must lie in (0, 1)")
    spread = float(np.abs(2.0 * p - 1.0).sum())
    if spread == 0.0:
        return float(W1)
    return margin * W1 / spread


def ice_perturb(
    problem: QuadraticBinaryProblem,
    delta_h: float = 1e-2,
    delta_J: float = 1e-2,
    seed: int = 0,
) -> QuadraticBinaryProblem:
    """Add zero-mean Gaussian noise (std ``delta_h`` / ``delta_J``) to every bias and coupler."""
    if delta_h < 0 or delta_J < 0:
        raise ValueError("noise scales must be non-negative")
    rng = np.random.default_rng(seed)
    h = problem.h + rng.normal(0.0, 1.0, problem.num_vars) * delta_h
    _, _, qv = problem.couplers
    J = qv + rng.normal(0.0, 1.0, len(qv)) * delta_J
    return QuadraticBinaryProblem(
        problem.num_vars,
        dict(enumerate(h.tolist())),
        dict(zip(problem.quadratic, J.tolist())),
        problem.offset,
        problem.convention,
        problem.ancilla_plan,
    )


# --- ancilla minimization and energy bands ----------------------------------


def minimize_ancillas(problem: QuadraticBinaryProblem, bits) -> tuple[np.ndarray, np.ndarray]:
    """Complete bit words with their energy-minimizing ancillas.

    ``bits`` is (N,) or (S, N).  Ancillas of different checks never interact,
    so each check's block is optimized by enumeration.  Returns the full
    assignments and their energies.
    """
    plan = problem.ancilla_plan
    if plan is None:
        raise ValueError("problem carries no ancilla plan")
    if problem.convention is not Convention.QUBO:
        raise ValueError("minimize_ancillas works on QUBO problems")
    bits = np.asarray(bits)
    single = bits.ndim == 1
    bits = np.atleast_2d(bits).astype(float)
    S = bits.shape[0]
    x = np.zeros((S, problem.num_vars))
    x[:, : plan.num_bits] = bits

    nbrs: dict[int, list[tuple[int, float]]] = {}
    for (i, j), J in problem.quadratic.items():
        nbrs.setdefault(i, []).append((j, J))
        nbrs.setdefault(j, []).append((i, J))

    for m in range(plan.num_checks):
        anc = list(plan.ancillas(m))
        t = len(anc)
        combos = ((np.arange(2**t)[:, None] >> np.arange(t)[None, :]) & 1).astype(float)
        anc_set = set(anc)
        # contribution of the block for each (word, combo)
        cost = np.zeros((S, 2**t))
        for a_pos, a in enumerate(anc):
            field_a = np.full(S, problem.linear[a])
            for v, J in nbrs.get(a, ()):
                if v not in anc_set:
                    field_a = field_a + J * x[:, v]
            cost += field_a[:, None] * combos[None, :, a_pos]
            for v, J in nbrs.get(a, ()):
                if v in anc_set and v > a:
                    b_pos = anc.index(v)
                    cost += J * (combos[:, a_pos] * combos[:, b_pos])[None, :]
        best = np.argmin(cost, axis=1)
        x[:, anc] = combos[best]
    e = energy(problem, x)
    if single:
        return x[0].astype(np.int8), np.float64(e[0])
    return x.astype(np.int8), e


@dataclass(frozen=True)
class BandReport:
    valid_energies: np.ndarray
    invalid_energies: np.ndarray

    @property
    def valid_min(self) -> float:
        return float(self.valid_energies.min())

    @property
    def valid_max(self) -> float:
        return float(self.valid_energies.max())

    @property
    def invalid_min(self) -> float:
        return float(self.invalid_energies.min())

    @property
    def invalid_max(self) -> float:
        return float(self.invalid_energies.max())

    @property
    def gap_iv(self) -> float:
        """Lowest invalid energy minus highest valid energy."""
        return self.invalid_min - self.valid_max

    @property
    def spread_v(self) -> float:
        return self.valid_max - self.valid_min

    @property
    def spread_i(self) -> float:
        return self.invalid_max - self.invalid_min

    def summary(self) -> dict:
        return {
            "valid_min": self.valid_min,
            "valid_max": self.valid_max,
            "invalid_min": self.invalid_min,
            "invalid_max": self.invalid_max,
            "gap_iv": self.gap_iv,
            "spread_v": self.spread_v,
            "spread_i": self.spread_i,
        }


def energy_bands(
    problem: QuadraticBinaryProblem,
    H: ParityCheckMatrix,
    sample_size: int,
    seed: int = 0,
    include=None,
) -> BandReport:
    """Ancilla-minimized energies of sampled codewords and sampled non-codewords.

    ``include`` optionally adds specific codewords (e.g. the transmitted one)
    to the valid class.
    """
    if sample_size < 2:
        raise ValueError("need at least 2 samples per class")
    rng = np.random.default_rng(seed)
    G = generator(H)
    valid = encode(rng.integers(0, 2, (sample_size, G.K)), G)
    if include is not None:
        valid = np.vstack([np.atleast_2d(np.asarray(include, dtype=np.uint8)), valid])
    invalid = []
    while len(invalid) < sample_size:
        w = rng.integers(0, 2, (sample_size, H.N)).astype(np.uint8)
        invalid.extend(w[syndrome(w, H).any(axis=1)])
    invalid = np.array(invalid[:sample_size])
    _, ev = minimize_ancillas(problem, valid)
    _, ei = minimize_ancillas(problem, invalid)
    return BandReport(np.asarray(ev), np.asarray(ei))
