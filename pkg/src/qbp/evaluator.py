"""BER/FER estimators built on energy-ranked solution distributions.

For an instance whose distinct solutions R_1..R_Ns are sorted by energy with
empirical CDF F, the best of N_a independent anneals is R_i with probability
(1 - F(R_{i-1}))^N_a - (1 - F(R_i))^N_a.  Expected bit errors, BER, the
zero-error probability of a multi-block frame and FER all follow from it.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .sampler import SampleSet

__all__ = [
    "FerResult",
    "InstanceDistribution",
    "ber",
    "expected_bit_errors",
    "fer",
    "fer_details",
    "fpga_throughput",
    "frame_error_free_prob",
    "pr_rmin",
    "pr_rmin_all",
    "rank_solutions",
    "throughput",
    "zero_error_mass",
]


@dataclass(frozen=True, eq=False)
class InstanceDistribution:
    instance_id: int
    transmitted: np.ndarray
    energies: np.ndarray
    bit_errors: np.ndarray
    counts: np.ndarray
    word_errors: np.ndarray | None = None

    def __post_init__(self):
        if not (len(self.energies) == len(self.bit_errors) == len(self.counts)) or not len(self.counts):
            raise ValueError("need at least one rank with energy, error count and occurrences")
        if np.any(np.diff(self.energies) < 0):
            raise ValueError("energies must be non-decreasing in rank")
        if np.any(self.counts < 1):
            raise ValueError("occurrence counts must be positive")

    @property
    def num_ranks(self) -> int:
        return len(self.counts)

    @property
    def cdf(self) -> np.ndarray:
        """F(R_1) .. F(R_Ns); the last entry is exactly 1."""
        c = np.cumsum(self.counts) / self.counts.sum()
        c[-1] = 1.0
        return c

    def to_json(self) -> dict:
        d = {
            "instance": self.instance_id,
            "transmitted": self.transmitted.astype(int).tolist(),
            "energies": self.energies.tolist(),
            "bit_errors": self.bit_errors.astype(int).tolist(),
            "counts": self.counts.astype(int).tolist(),
        }
        if self.word_errors is not None:
            d["word_errors"] = self.word_errors.astype(int).tolist()
        return d


def rank_solutions(
    sampleset: SampleSet,
    transmitted,
    message_positions: Sequence[int] | None = None,
    instance_id: int = 0,
) -> InstanceDistribution:
    """Rank distinct solutions by energy (ties lexicographic) and count bit errors.

    Errors are counted on ``message_positions`` of the codeword (all codeword
    positions when omitted); whole-codeword errors are kept alongside.
    """
    t = np.asarray(transmitted).astype(np.int8)
    n = len(t)
    bits = sampleset.assignments[:, :n]
    # SampleSet is already sorted by (energy, assignment)
    diff = bits != t[None, :]
    pos = np.arange(n) if message_positions is None else np.asarray(message_positions)
    return InstanceDistribution(
        instance_id,
        t,
        sampleset.energies.astype(float),
        diff[:, pos].sum(axis=1).astype(np.int64),
        sampleset.counts.astype(np.int64),
        diff.sum(axis=1).astype(np.int64),
    )


def pr_rmin_all(n_a: int, F) -> np.ndarray:
    """Pr(R_min = R_i) for every rank i."""
    if n_a < 1:
        raise ValueError("N_a must be >= 1")
    F = np.asarray(F, dtype=float)
    surv = 1.0 - np.concatenate([[0.0], F])
    p = surv[:-1] ** n_a - surv[1:] ** n_a
    return np.clip(p, 0.0, 1.0)


def pr_rmin(i: int, n_a: int, F) -> float:
    """Pr(R_min = R_i) for 1-based rank ``i``."""
    if not 1 <= i <= len(F):
        raise ValueError(f"rank {i} outside 1..{len(F)}")
    return float(pr_rmin_all(n_a, F)[i - 1])


def expected_bit_errors(dist: InstanceDistribution, n_a: int) -> float:
    return float(pr_rmin_all(n_a, dist.cdf) @ dist.bit_errors)


def ber(dist: InstanceDistribution, n_a: int, K: int) -> float:
    if K < 1:
        raise ValueError("K must be >= 1")
    return expected_bit_errors(dist, n_a) / K


def zero_error_mass(dist: InstanceDistribution, n_a: int) -> float:
    """Probability that the best of N_a anneals decodes the block without error."""
    p = pr_rmin_all(n_a, dist.cdf)
    return float(p[dist.bit_errors == 0].sum())


def frame_error_free_prob(instances: Sequence[InstanceDistribution], n_a: int) -> float:
    return float(np.prod([zero_error_mass(d, n_a) for d in instances]))


@dataclass(frozen=True)
class FerResult:
    fer: float
    frames: int
    exhaustive: bool


def fer_details(
    instances: Sequence[InstanceDistribution],
    n_f: int,
    n_b: int,
    n_a: int,
    max_frames: int = 100_000,
    seed: int = 0,
) -> FerResult:
    """Mean of 1 - Pr(frame error-free) over all C(N_ins, N_F / N_B) block
    combinations, or over ``max_frames`` seeded random combinations when
    there are more."""
    if n_b < 1 or n_f % n_b:
        raise ValueError(f"frame size {n_f} is not a multiple of block length {n_b}")
    k = n_f // n_b
    n = len(instances)
    if k < 1 or k > n:
        raise ValueError(f"frames of {k} blocks need at least {k} instances, have {n}")
    z = np.array([zero_error_mass(d, n_a) for d in instances])
    total = math.comb(n, k)
    if total <= max_frames:
        acc = 0.0
        for combo in itertools.combinations(range(n), k):
            acc += 1.0 - float(np.prod(z[list(combo)]))
        return FerResult(acc / total, total, True)
    rng = np.random.default_rng(seed)
    frames = np.argsort(rng.random((max_frames, n)), axis=1)[:, :k]
    return FerResult(float(np.mean(1.0 - np.prod(z[frames], axis=1))), max_frames, False)


def fer(
    instances: Sequence[InstanceDistribution],
    n_f: int,
    n_b: int,
    n_a: int,
    max_frames: int = 100_000,
    seed: int = 0,
) -> float:
    return fer_details(instances, n_f, n_b, n_a, max_frames, seed).fer


def throughput(n_k: float, t_c: float, fer_value: float) -> float:
    """Error-free bits per second: (1 - FER) N_K / T_c with T_c in seconds."""
    if t_c <= 0:
        raise ValueError("T_c must be positive")
    return (1.0 - fer_value) * n_k / t_c


def fpga_throughput(n_k: float, f_clk: float, n_it: int, n_clk_per_it: float, fer_value: float) -> float:
    if f_clk <= 0 or n_it < 1 or n_clk_per_it <= 0:
        raise ValueError("clock, iteration count and cycles per iteration must be positive")
    return (1.0 - fer_value) * n_k * f_clk / (n_it * n_clk_per_it)
