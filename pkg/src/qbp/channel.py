"""BPSK over real AWGN, optionally with per-subcarrier noise from a trace.

SNR is per symbol with unit symbol energy: sigma^2 = 10^(-snr_db / 10).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

__all__ = [
    "ChannelConfig",
    "ReceivedVector",
    "load_trace",
    "modulate_bpsk",
    "posterior_prob",
    "snr_to_sigma2",
    "transmit",
]


@dataclass(frozen=True)
class ChannelConfig:
    """``trace_snr_db`` switches from plain AWGN to per-subcarrier noise."""

    snr_db: float | None = None
    trace_snr_db: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if (self.snr_db is None) == (self.trace_snr_db is None):
            raise ValueError("give exactly one of snr_db (AWGN) or trace_snr_db (trace mode)")
        if self.trace_snr_db is not None:
            tr = tuple(float(v) for v in self.trace_snr_db)
            if not tr:
                raise ValueError("trace must list at least one subcarrier SNR")
            if not all(math.isfinite(v) for v in tr):
                raise ValueError("trace SNRs must be finite")
            object.__setattr__(self, "trace_snr_db", tr)
        elif not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")

    @property
    def mode(self) -> str:
        return "awgn" if self.trace_snr_db is None else "trace"


@dataclass(frozen=True)
class ReceivedVector:
    y: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self):
        if self.y.shape != self.sigma2.shape:
            raise ValueError("y and sigma2 must have equal length")
        if np.any(self.sigma2 <= 0):
            raise ValueError("sigma2 must be positive")

    def posterior(self) -> np.ndarray:
        return posterior_prob(self.y, self.sigma2)

    def to_csv(self, path) -> None:
        lines = ["y,sigma2"] + [f"{a!r},{b!r}" for a, b in zip(self.y.tolist(), self.sigma2.tolist())]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "ReceivedVector":
        rows = Path(path).read_text().split()
        if not rows or rows[0].replace(" ", "") != "y,sigma2":
            raise ValueError(f"{path}: expected header 'y,sigma2'")
        data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]], dtype=float)
        data = data.reshape(-1, 2)
        return cls(data[:, 0].copy(), data[:, 1].copy())


def modulate_bpsk(bits) -> np.ndarray:
    """0 -> -1, 1 -> +1."""
    b = np.asarray(bits)
    if not np.isin(b, (0, 1)).all():
        raise ValueError("bits must be 0 or 1")
    return 2.0 * b - 1.0


def snr_to_sigma2(snr_db) -> float | np.ndarray:
    out = 10.0 ** (-np.asarray(snr_db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def posterior_prob(y, sigma2) -> np.ndarray:
    """Pr(bit = 1 | y) = 1 / (1 + exp(-2 y / sigma^2))."""
    return expit(2.0 * np.asarray(y, dtype=float) / np.asarray(sigma2, dtype=float))


def _rng(config: ChannelConfig, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([config.seed, trial]))


def subcarrier_sigma2(n: int, config: ChannelConfig) -> np.ndarray:
    """Per-symbol noise variance: constant for AWGN, interleaved round-robin for traces."""
    if config.trace_snr_db is None:
        return np.full(n, snr_to_sigma2(config.snr_db))
    tr = np.array([snr_to_sigma2(v) for v in config.trace_snr_db])
    perm = np.random.default_rng(np.random.SeedSequence([config.seed, 0x1EAF])).permutation(n)
    sub = np.empty(n, dtype=np.int64)
    sub[perm] = np.arange(n) % len(tr)
    return tr[sub]


def transmit(symbols, config: ChannelConfig, trial: int = 0) -> ReceivedVector:
    """Add Gaussian noise; ``trial`` selects an independent stream for the same seed."""
    x = np.asarray(symbols, dtype=float)
    if not np.isin(x, (-1.0, 1.0)).all():
        raise ValueError("symbols must be -1 or +1")
    s2 = subcarrier_sigma2(len(x), config)
    noise = _rng(config, trial).standard_normal(len(x)) * np.sqrt(s2)
    return ReceivedVector(x + noise, s2)


def load_trace(path) -> list[float]:
    """One SNR (dB) per non-blank line."""
    text = Path(path).read_text()
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        try:
            v = float(s)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not a number: {s!r}") from None
        if not math.isfinite(v):
            raise ValueError(f"{path}:{lineno}: SNR must be finite")
        out.append(v)
    if not out:
        raise ValueError(f"{path}: empty trace")
    return out
