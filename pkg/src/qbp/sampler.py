"""Classical stand-ins for the annealer: simulated annealing and exhaustive search."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from . import kernels
from .qubo import Convention, QuadraticBinaryProblem, ising_to_qubo, qubo_to_ising

__all__ = [
    "AnnealConfig",
    "SampleSet",
    "default_beta_range",
    "exhaustive_solve",
    "export_for_external_sampler",
    "import_sampleset",
    "sample_embedded",
    "simulated_anneal",
]

MAX_EXHAUSTIVE_VARS = 26


@dataclass(frozen=True)
class AnnealConfig:
    """``anneal_time_us`` is a reporting label; it never changes the dynamics."""

    num_reads: int = 100
    num_sweeps: int = 1000
    beta_range: tuple[float, float] | None = None
    seed: int = 0
    anneal_time_us: float = 1.0

    def __post_init__(self):
        if self.num_reads < 1:
            raise ValueError("num_reads must be >= 1")
        if self.num_sweeps < 1:
            raise ValueError("num_sweeps must be >= 1")
        if self.beta_range is not None:
            b0, b1 = self.beta_range
            if not (0 < b0 <= b1) or not math.isfinite(b1):
                raise ValueError(
                    "beta_range must be positive and non-decreasing (temperatures decreasing)"
                )
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def total_time_us(self) -> float:
        return self.num_reads * self.anneal_time_us


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Distinct assignments with energies and occurrence counts.

    Records are sorted by energy, ties by assignment in lexicographic order.
    """

    assignments: np.ndarray
    energies: np.ndarray
    counts: np.ndarray
    convention: Convention = Convention.QUBO
    info: dict | None = None

    @classmethod
    def from_reads(
        cls, reads: np.ndarray, energies: np.ndarray, convention=Convention.QUBO, info=None
    ) -> "SampleSet":
        reads = np.asarray(reads, dtype=np.int8)
        energies = np.asarray(energies, dtype=float)
        if reads.ndim != 2 or len(reads) != len(energies):
            raise ValueError("reads must be a 2-D array with one energy per row")
        uniq, first, inverse, counts = np.unique(
            reads, axis=0, return_index=True, return_inverse=True, return_counts=True
        )
        e = energies[first]
        order = np.lexsort(tuple(uniq[:, ::-1].T) + (e,)) if uniq.size else np.argsort(e)
        return cls(uniq[order], e[order], counts[order].astype(np.int64), Convention(convention), info)

    def __len__(self) -> int:
        return len(self.energies)

    @property
    def num_reads(self) -> int:
        return int(self.counts.sum())

    @property
    def first(self) -> tuple[np.ndarray, float]:
        return self.assignments[0], float(self.energies[0])

    def expand(self) -> np.ndarray:
        return np.repeat(self.assignments, self.counts, axis=0)

    def to_json(self) -> dict:
        return {
            "convention": self.convention.value,
            "num_vars": int(self.assignments.shape[1]) if self.assignments.ndim == 2 else 0,
            "samples": self.assignments.astype(int).tolist(),
            "energies": self.energies.tolist(),
            "num_occurrences": self.counts.tolist(),
            "info": self.info or {},
        }


def _csr(problem: QuadraticBinaryProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = problem.num_vars
    qi, qj, qv = problem.couplers
    rows = np.concatenate([qi, qj])
    cols = np.concatenate([qj, qi])
    vals = np.concatenate([qv, qv])
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    return np.cumsum(indptr).astype(np.int64), cols.astype(np.int64), vals.astype(np.float64)


def default_beta_range(ising: QuadraticBinaryProblem) -> tuple[float, float]:
    """Hot end accepts the largest single-flip uphill move with probability 1/2,
    cold end accepts the smallest with probability 1/100."""
    n = ising.num_vars
    qi, qj, qv = ising.couplers
    absum = np.abs(ising.h).copy()
    np.add.at(absum, qi, np.abs(qv))
    np.add.at(absum, qj, np.abs(qv))
    max_delta = 2.0 * absum.max() if n else 0.0
    coeffs = np.concatenate([np.abs(ising.h), np.abs(qv)])
    coeffs = coeffs[coeffs > 1e-12]
    if max_delta <= 0 or not len(coeffs):
        return 1.0, 1.0
    min_delta = 2.0 * coeffs.min()
    hot = math.log(2) / max_delta
    cold = math.log(100) / min_delta
    return hot, max(hot, cold)


def _betas(ising: QuadraticBinaryProblem, config: AnnealConfig) -> np.ndarray:
    b0, b1 = config.beta_range or default_beta_range(ising)
    if config.num_sweeps == 1:
        return np.array([b1])
    return np.geomspace(b0, b1, config.num_sweeps)


def _anneal_spins(ising: QuadraticBinaryProblem, config: AnnealConfig) -> np.ndarray:
    indptr, indices, data = _csr(ising)
    return kernels.anneal_reads(
        np.ascontiguousarray(ising.h, dtype=np.float64),
        indptr,
        indices,
        data,
        np.ascontiguousarray(_betas(ising, config)),
        int(config.seed),
        0,
        int(config.num_reads),
    )


def simulated_anneal(problem: QuadraticBinaryProblem, config: AnnealConfig) -> SampleSet:
    """Independent Metropolis restarts; read r uses a stream derived from (seed, r)."""
    if problem.num_vars == 0:
        raise ValueError("cannot anneal an empty problem")
    ising = qubo_to_ising(problem)
    spins = _anneal_spins(ising, config)
    if problem.convention is Convention.QUBO:
        reads = ((spins + 1) // 2).astype(np.int8)
    else:
        reads = spins
    energies = problem.energy(reads)
    return SampleSet.from_reads(
        reads, energies, problem.convention, {"backend": kernels.BACKEND, "num_sweeps": config.num_sweeps}
    )


def exhaustive_solve(
    problem: QuadraticBinaryProblem, max_vars: int = MAX_EXHAUSTIVE_VARS
) -> tuple[np.ndarray, float]:
    """All co-minimal assignments (rows, in the problem's convention) and the ground energy."""
    n = problem.num_vars
    if n > max_vars:
        raise ValueError(f"{n} variables exceed the enumeration limit of {max_vars}")
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8), problem.offset
    qubo = ising_to_qubo(problem)
    J = np.zeros((n, n))
    qi, qj, qv = qubo.couplers
    J[qi, qj] = qv
    J[qj, qi] = qv
    scale = float(np.abs(qubo.h).sum() + np.abs(qv).sum())
    tol = 1e-9 * max(1.0, scale)
    _, codes = kernels.gray_ground(np.ascontiguousarray(qubo.h), np.ascontiguousarray(J), tol)
    bits = ((codes[:, None] >> np.arange(n, dtype=np.uint64)[None, :]) & np.uint64(1)).astype(np.int8)
    if problem.convention is Convention.ISING:
        bits = (2 * bits - 1).astype(np.int8)
    e = np.atleast_1d(problem.energy(bits))
    ground = float(e.min())
    keep = e <= ground + 1e-9 * max(1.0, abs(ground))
    sel = bits[keep]
    order = np.lexsort(tuple(sel[:, ::-1].T))
    return sel[order], ground


def sample_embedded(
    hardware,
    embedding,
    config: AnnealConfig,
    logical: QuadraticBinaryProblem,
) -> tuple[SampleSet, float]:
    """Anneal the physical problem, repair chains by majority vote, score logically.

    Returns the logical sample set and the fraction of broken chains over
    all reads.
    """
    from .chimera.embedding import unembed

    spins = _anneal_spins(hardware.problem, config)
    logical_spins, broken = unembed(spins, embedding, qubit_order=hardware.qubits)
    logical_spins = logical_spins[:, : logical.num_vars]
    if logical.convention is Convention.QUBO:
        reads = ((logical_spins + 1) // 2).astype(np.int8)
    else:
        reads = logical_spins.astype(np.int8)
    energies = logical.energy(reads)
    frac = float(np.sum(broken)) / (config.num_reads * len(embedding.chains))
    info = {"backend": kernels.BACKEND, "broken_chain_fraction": frac}
    return SampleSet.from_reads(reads, energies, logical.convention, info), frac


def export_for_external_sampler(problem: QuadraticBinaryProblem, path) -> None:
    Path(path).write_text(json.dumps(problem.to_json()))


def import_sampleset(path, problem: QuadraticBinaryProblem, atol: float = 1e-6) -> SampleSet:
    """Load samples produced elsewhere and re-check every reported energy."""
    d = json.loads(Path(path).read_text())
    return sampleset_from_json(d, problem, atol)


def sampleset_from_json(d: Mapping, problem: QuadraticBinaryProblem, atol: float = 1e-6) -> SampleSet:
    conv = Convention(d.get("convention", problem.convention.value))
    if conv is not problem.convention:
        raise ValueError(f"sample convention {conv.value} differs from problem {problem.convention.value}")
    samples = d["samples"]
    rows = []
    for r, s in enumerate(samples):
        if isinstance(s, Mapping):
            missing = [i for i in range(problem.num_vars) if str(i) not in s and i not in s]
            if missing:
                raise ValueError(f"sample {r} is missing variables {missing[:10]}")
            s = [s[str(i)] if str(i) in s else s[i] for i in range(problem.num_vars)]
        if len(s) != problem.num_vars:
            raise ValueError(
                f"sample {r} has {len(s)} values; the problem has {problem.num_vars} variables"
            )
        rows.append(s)
    reads = np.array(rows, dtype=np.int8).reshape(len(rows), problem.num_vars)
    energies = np.atleast_1d(problem.energy(reads))
    if "energies" in d:
        reported = np.asarray(d["energies"], dtype=float)
        if reported.shape != energies.shape:
            raise ValueError("energy list length differs from sample count")
        bad = np.flatnonzero(np.abs(reported - energies) > atol)
        if len(bad):
            raise ValueError(
                f"reported energy of sample {bad[0]} is {reported[bad[0]]}, recomputed {energies[bad[0]]}"
            )
    counts = np.asarray(d.get("num_occurrences", [1] * len(rows)), dtype=np.int64)
    if counts.shape != (len(rows),) or np.any(counts < 1):
        raise ValueError("num_occurrences must hold one positive count per sample")
    expanded = np.repeat(reads, counts, axis=0)
    return SampleSet.from_reads(expanded, np.repeat(energies, counts), conv, d.get("info") or None)
