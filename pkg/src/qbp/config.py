"""Strict JSON configuration records for experiments and the command line."""
from __future__ import annotations

import dataclasses
import json
import math
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

__all__ = [
    "AnnealSpec",
    "ChannelSpec",
    "CodeSource",
    "ConfigError",
    "ExperimentConfig",
    "FrameSpec",
    "WeightSpec",
    "from_dict",
    "load_config",
    "to_dict",
]

DEFAULT_N_A = (1, 5, 10, 20, 50, 100)


class ConfigError(ValueError):
    """Schema or consistency violation in a configuration."""


def _check_type(value, hint, where: str):
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if hint is Any:
        return value
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        errors = []
        for a in args:
            if a is type(None):
                continue
            try:
                return _check_type(value, a, where)
            except ConfigError as e:
                errors.append(str(e))
        raise ConfigError(errors[0] if errors else f"{where}: invalid value {value!r}")
    if dataclasses.is_dataclass(hint):
        return from_dict(hint, value, where)
    if origin in (list, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a list, got {type(value).__name__}")
        inner = args[0] if args else Any
        return tuple(_check_type(v, inner, f"{where}[{i}]") for i, v in enumerate(value))
    if origin is dict:
        if not isinstance(value, Mapping):
            raise ConfigError(f"{where}: expected an object")
        return {str(k): _check_type(v, args[1], f"{where}.{k}") for k, v in value.items()}
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(f"{where}: must be finite")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{where}: unsupported field type {hint!r}")


def from_dict(cls, data, where: str = "config"):
    """Build dataclass ``cls`` from ``data``, rejecting unknown or mistyped keys."""
    if not isinstance(data, Mapping):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            kwargs[f.name] = _check_type(data[f.name], hints[f.name], f"{where}.{f.name}")
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ConfigError(f"{where}: missing required key {f.name!r}")
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from None


def to_dict(obj) -> dict:
    def conv(v):
        if dataclasses.is_dataclass(v):
            return {f.name: conv(getattr(v, f.name)) for f in dataclasses.fields(v)}
        if isinstance(v, (list, tuple)):
            return [conv(x) for x in v]
        if isinstance(v, dict):
            return {k: conv(x) for k, x in v.items()}
        return v

    return conv(obj)


@dataclass(frozen=True)
class CodeSource:
    """Exactly one of ``alist`` (file), ``n`` (PEG construction) or ``native_grid``
    (code co-designed with a Chimera layout)."""

    alist: str | None = None
    n: int | None = None
    bit_degree: int = 2
    check_degree: int = 3
    seed: int = 0
    target_girth: int | None = None
    native_grid: int | None = None
    native_region: tuple[int, ...] | None = None
    native_level2: int | None = None
    allow_dangling: bool = False

    def __post_init__(self):
        given = [k for k in ("alist", "n", "native_grid") if getattr(self, k) is not None]
        if len(given) != 1:
            raise ConfigError("code: give exactly one of alist, n or native_grid")
        if self.native_region is not None and len(self.native_region) != 2:
            raise ConfigError("code.native_region must be [width, height]")


@dataclass(frozen=True)
class ChannelSpec:
    snr_db: tuple[float, ...] = (9.0,)
    trace: str | None = None

    def __post_init__(self):
        if self.trace is None and not self.snr_db:
            raise ConfigError("channel.snr_db must list at least one SNR")


@dataclass(frozen=True)
class WeightSpec:
    """W2 comes from ``w2``, else from a per-SNR table (inline or file)."""

    w1: float = 1.0
    w2: float | None = None
    w2_table: dict[str, float] | None = None
    w2_table_path: str | None = None

    def __post_init__(self):
        if not self.w1 > 0:
            raise ConfigError("weights.w1 must be > 0")
        if sum(x is not None for x in (self.w2, self.w2_table, self.w2_table_path)) > 1:
            raise ConfigError("weights: give at most one of w2, w2_table, w2_table_path")
        if self.w2 is not None and self.w2 < 0:
            raise ConfigError("weights.w2 must be >= 0")


@dataclass(frozen=True)
class AnnealSpec:
    backend: str = "sa"
    num_reads: int = 100
    num_sweeps: int = 1000
    beta_range: tuple[float, ...] | None = None
    n_a: tuple[int, ...] = DEFAULT_N_A
    t_a_us: float = 1.0
    jferro: float = 8.0
    grid: int = 16
    ice_delta: float | None = None

    def __post_init__(self):
        if self.backend not in ("sa", "exhaustive", "embedded"):
            raise ConfigError(f"anneal.backend must be sa, exhaustive or embedded, not {self.backend!r}")
        if self.num_reads < 1 or self.num_sweeps < 1:
            raise ConfigError("anneal.num_reads and anneal.num_sweeps must be >= 1")
        if not self.n_a or min(self.n_a) < 1:
            raise ConfigError("anneal.n_a must list positive read counts")
        if self.beta_range is not None and len(self.beta_range) != 2:
            raise ConfigError("anneal.beta_range must be [hot, cold]")
        if self.t_a_us <= 0 or self.jferro <= 0 or self.grid < 1:
            raise ConfigError("anneal.t_a_us, anneal.jferro and anneal.grid must be positive")


@dataclass(frozen=True)
class FrameSpec:
    """Frame sizes in codeword bits; empty means single-block frames."""

    n_f_bits: tuple[int, ...] = ()
    n_instances: int = 150
    max_frames: int = 100_000

    def __post_init__(self):
        if self.n_instances < 1 or self.max_frames < 1:
            raise ConfigError("frames.n_instances and frames.max_frames must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    code: CodeSource
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    weights: WeightSpec = field(default_factory=WeightSpec)
    anneal: AnnealSpec = field(default_factory=AnnealSpec)
    frames: FrameSpec = field(default_factory=FrameSpec)
    bp_iters: int | None = 10
    workers: int | None = None

    def __post_init__(self):
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.bp_iters is not None and self.bp_iters < 1:
            raise ConfigError("bp_iters must be >= 1")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def check_blocks(self, block_len: int) -> tuple[int, ...]:
        """Frame sizes validated against the code length N_B."""
        sizes = self.frames.n_f_bits or (block_len,)
        for nf in sizes:
            if nf < block_len or nf % block_len:
                raise ConfigError(f"frame size {nf} is not a positive multiple of block length {block_len}")
            if self.frames.n_instances < nf // block_len:
                raise ConfigError(
                    f"frame size {nf} needs {nf // block_len} instances, only {self.frames.n_instances} configured"
                )
        return sizes


def load_config(path, overrides: Mapping[str, Any] | None = None) -> ExperimentConfig:
    """Read a JSON experiment config; ``overrides`` maps dotted keys to values."""
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None
    for key, value in (overrides or {}).items():
        node = data
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override {key}: {p} is not an object")
        node[parts[-1]] = value
    return from_dict(ExperimentConfig, data)
