"""Decoding pipeline, parameter calibration and SNR-sweep experiments."""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, bp, kernels
from .channel import ChannelConfig, load_trace, modulate_bpsk, transmit
from .chimera import ChimeraEmbedding, ChimeraGraph, HardwareProblem, build_hardware_problem, embed_code
from .chimera.native import construct_qgem_code
from .config import ConfigError, ExperimentConfig, to_dict
from .evaluator import InstanceDistribution, ber, fer_details, rank_solutions, throughput
from .ldpc import CodeSpec, GeneratorMatrix, ParityCheckMatrix, construct_regular_code, encode, generator, load_alist
from .qubo import ObjectiveWeights, build_decoding_problem, ice_perturb, qubo_to_ising
from .sampler import AnnealConfig, SampleSet, exhaustive_solve, sample_embedded, simulated_anneal

__all__ = [
    "DEFAULT_JFERRO_GRID",
    "DEFAULT_W2_GRID",
    "ExperimentResult",
    "QbpDecoder",
    "calibrate_jferro",
    "calibrate_w2",
    "load_code",
    "load_w2_table",
    "run_experiment",
    "save_w2_table",
]

log = logging.getLogger(__name__)

DEFAULT_W2_GRID = (0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0)
DEFAULT_JFERRO_GRID = (2.0, 4.0, 8.0, 16.0)


def load_code(config: ExperimentConfig) -> ParityCheckMatrix:
    src = config.code
    if src.alist is not None:
        if not Path(src.alist).is_file():
            raise ConfigError(f"alist file {src.alist} not found")
        return load_alist(src.alist)
    if src.n is not None:
        return construct_regular_code(
            CodeSpec(src.n, src.bit_degree, src.check_degree, src.seed, src.target_girth)
        )
    region = tuple(src.native_region) if src.native_region is not None else None
    H, _ = construct_qgem_code(
        src.native_grid,
        n_level2=src.native_level2,
        region=region,
        seed=src.seed,
        allow_dangling=src.allow_dangling,
    )
    return H


def _derive_seed(*words: int) -> int:
    return int(np.random.SeedSequence(list(words)).generate_state(1, np.uint64)[0] >> np.uint64(1))


# --- decoding pipeline ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QbpDecoder:
    """Builds the decoding QUBO for a received word and samples it.

    ``backend`` is "sa" (logical problem), "exhaustive" (exact ground states)
    or "embedded" (physical Chimera problem with chain repair).
    """

    H: ParityCheckMatrix
    backend: str = "sa"
    anneal: AnnealConfig = AnnealConfig()
    embedding: ChimeraEmbedding | None = None
    graph: ChimeraGraph | None = None
    ice_delta: float | None = None

    @classmethod
    def embedded(cls, H: ParityCheckMatrix, grid: int, jferro: float, anneal: AnnealConfig, ice_delta=None):
        graph = ChimeraGraph(grid)
        probe = build_decoding_problem(H, np.full(H.N, 0.5), ObjectiveWeights(1.0, 0.0))
        emb, _ = embed_code(probe, H, graph, jferro)
        return cls(H, "embedded", anneal, emb, graph, ice_delta)

    def problem(self, p, weights: ObjectiveWeights):
        return build_decoding_problem(self.H, p, weights)

    def sample(self, p, weights: ObjectiveWeights, seed: int = 0) -> tuple[SampleSet, dict]:
        problem = self.problem(p, weights)
        cfg = replace(self.anneal, seed=seed)
        if self.backend == "exhaustive":
            rows, ground = exhaustive_solve(problem)
            return SampleSet.from_reads(rows, np.full(len(rows), ground)), {}
        if self.backend == "sa":
            if self.ice_delta:
                problem_s = ice_perturb(problem, self.ice_delta, self.ice_delta, seed)
                ss = simulated_anneal(problem_s, cfg)
                return SampleSet.from_reads(ss.expand(), problem.energy(ss.expand())), {}
            return simulated_anneal(problem, cfg), {}
        if self.backend == "embedded":
            if self.embedding is None or self.graph is None:
                raise ValueError("embedded decoding needs an embedding; use QbpDecoder.embedded")
            ising = qubo_to_ising(problem)
            emb = replace(self.embedding, tie_bias={v: ising.linear[v] for v in range(ising.num_vars)})
            hw: HardwareProblem = build_hardware_problem(problem, emb, self.graph)
            if self.ice_delta:
                hw = replace(hw, problem=ice_perturb(hw.problem, self.ice_delta, self.ice_delta, seed))
            ss, broken = sample_embedded(hw, emb, cfg, problem)
            return ss, {"broken_chain_fraction": broken}
        raise ValueError(f"unknown backend {self.backend!r}")

    def decode(self, y, sigma2, weights: ObjectiveWeights, seed: int = 0) -> np.ndarray:
        """Minimum-energy bit word."""
        from .channel import posterior_prob

        ss, _ = self.sample(posterior_prob(y, sigma2), weights, seed)
        return ss.assignments[0, : self.H.N].copy()


# --- instances -------------------------------------------------------------------


@dataclass(frozen=True)
class _Instance:
    index: int
    codeword: np.ndarray
    y: np.ndarray
    sigma2: np.ndarray


def _channel(config: ExperimentConfig, snr: float | None) -> ChannelConfig:
    if config.channel.trace is not None:
        return ChannelConfig(trace_snr_db=tuple(load_trace(config.channel.trace)), seed=config.seed)
    return ChannelConfig(snr_db=snr, seed=config.seed)


def _make_instances(G: GeneratorMatrix, config: ExperimentConfig, snr, count: int, stream: int = 0):
    ch = _channel(config, snr)
    out = []
    for i in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, 11, stream, i]))
        cw = encode(rng.integers(0, 2, G.K), G)
        rx = transmit(modulate_bpsk(cw), ch, trial=stream * 1_000_003 + i)
        out.append(_Instance(i, cw, rx.y, rx.sigma2))
    return out


def _solve_one(job):
    decoder, inst, w1, w2, seed, positions = job
    from .channel import posterior_prob

    ss, info = decoder.sample(posterior_prob(inst.y, inst.sigma2), ObjectiveWeights(w1, w2), seed)
    return rank_solutions(ss, inst.codeword, positions, inst.index), info


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def _workers(config: ExperimentConfig) -> int:
    return config.workers or os.cpu_count() or 1


def _distributions(decoder, G, config, snr, snr_index, instances, w2) -> tuple[list[InstanceDistribution], list[dict]]:
    jobs = [
        (decoder, inst, config.weights.w1, w2, _derive_seed(config.seed, 13, snr_index, inst.index), G.message_positions)
        for inst in instances
    ]
    res = _map(_solve_one, jobs, _workers(config))
    return [r[0] for r in res], [r[1] for r in res]


def _decoder(H: ParityCheckMatrix, config: ExperimentConfig, jferro: float | None = None) -> QbpDecoder:
    a = config.anneal
    cfg = AnnealConfig(a.num_reads, a.num_sweeps, tuple(a.beta_range) if a.beta_range else None, 0, a.t_a_us)
    if a.backend == "embedded":
        return QbpDecoder.embedded(H, a.grid, jferro or a.jferro, cfg, a.ice_delta)
    return QbpDecoder(H, a.backend, cfg, ice_delta=a.ice_delta)


def _snr_points(config: ExperimentConfig) -> list[float]:
    if config.channel.trace is not None:
        return [float(np.mean(load_trace(config.channel.trace)))]
    return [float(s) for s in config.channel.snr_db]


# --- W2 lookup tables --------------------------------------------------------------


def save_w2_table(table: dict[float, float], path) -> None:
    Path(path).write_text(json.dumps({repr(float(k)): float(v) for k, v in sorted(table.items())}, indent=1) + "\n")


def load_w2_table(path) -> dict[float, float]:
    try:
        d = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"W2 table {path} not found") from None
    return {float(k): float(v) for k, v in d.items()}


def _w2_for(config: ExperimentConfig, snr: float) -> float:
    w = config.weights
    if w.w2 is not None:
        return w.w2
    table = None
    if w.w2_table is not None:
        table = {float(k): float(v) for k, v in w.w2_table.items()}
    elif w.w2_table_path is not None:
        table = load_w2_table(w.w2_table_path)
    if not table:
        raise ConfigError("weights: no W2 given; set w2 or supply a calibrated table")
    key = min(table, key=lambda s: (abs(s - snr), s))
    if abs(key - snr) > 1e-9:
        log.warning("no W2 calibrated for %.3g dB; using the entry for %.3g dB", snr, key)
    return table[key]


# --- calibration -------------------------------------------------------------------


@dataclass(frozen=True)
class W2Calibration:
    table: dict[float, float]
    sweep: tuple[tuple[float, float, float], ...]  # (snr, w2, mean BER)

    def trend_non_decreasing(self) -> bool:
        vals = [self.table[s] for s in sorted(self.table)]
        return all(a <= b for a, b in zip(vals, vals[1:]))


def calibrate_w2(
    snr_grid: Sequence[float],
    w2_grid: Sequence[float],
    config: ExperimentConfig,
    H: ParityCheckMatrix | None = None,
    n_a: int | None = None,
) -> W2Calibration:
    """Per SNR, the W2 with the lowest mean BER over a calibration instance set.

    Calibration instances use a separate stream from the evaluation instances.
    Ties go to the lowest W2.
    """
    if not w2_grid or not snr_grid:
        raise ValueError("W2 and SNR grids must be non-empty")
    H = H if H is not None else load_code(config)
    G = generator(H)
    decoder = _decoder(H, config)
    n_a = n_a or max(config.anneal.n_a)
    table, sweep = {}, []
    for si, snr in enumerate(snr_grid):
        inst = _make_instances(G, config, snr, config.frames.n_instances, stream=1)
        best = None
        for w2 in sorted(float(w) for w in w2_grid):
            dists, _ = _distributions(decoder, G, config, snr, 1000 + si, inst, w2)
            m = float(np.mean([ber(d, n_a, G.K) for d in dists]))
            sweep.append((float(snr), w2, m))
            if best is None or m < best[1] - 1e-15:
                best = (w2, m)
        table[float(snr)] = best[0]
    cal = W2Calibration(table, tuple(sweep))
    log.info("best W2 per SNR: %s (non-decreasing: %s)", table, cal.trend_non_decreasing())
    return cal


@dataclass(frozen=True)
class JferroCalibration:
    best: float
    sweep: tuple[tuple[float, float], ...]  # (|J_F|, mean BER)


def calibrate_jferro(
    jf_grid: Sequence[float] = DEFAULT_JFERRO_GRID,
    config: ExperimentConfig | None = None,
    snr: float | None = None,
    H: ParityCheckMatrix | None = None,
) -> JferroCalibration:
    """Chain strength with the lowest mean BER on embedded decoding (lowest wins ties)."""
    if not jf_grid:
        raise ValueError("chain-strength grid must be non-empty")
    if config is None:
        raise ValueError("a configuration is required")
    grid = sorted(float(j) for j in jf_grid)
    if len(grid) == 1:
        return JferroCalibration(grid[0], ((grid[0], float("nan")),))
    H = H if H is not None else load_code(config)
    G = generator(H)
    snr = _snr_points(config)[0] if snr is None else snr
    w2 = _w2_for(config, snr)
    inst = _make_instances(G, config, snr, config.frames.n_instances, stream=2)
    n_a = max(config.anneal.n_a)
    emb_config = replace(config, anneal=replace(config.anneal, backend="embedded"))
    sweep, best = [], None
    for jf in grid:
        decoder = _decoder(H, emb_config, jf)
        dists, _ = _distributions(decoder, G, emb_config, snr, 2000, inst, w2)
        m = float(np.mean([ber(d, n_a, G.K) for d in dists]))
        sweep.append((jf, m))
        if best is None or m < best[1] - 1e-15:
            best = (jf, m)
    return JferroCalibration(best[0], tuple(sweep))


# --- experiments -------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _mean_ci(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        return float(v.mean()), 0.0
    return float(v.mean()), float(1.96 * v.std(ddof=1) / np.sqrt(len(v)))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    code: dict
    ber_rows: list[tuple]
    fer_rows: list[tuple]
    throughput_rows: list[tuple]
    bp_rows: list[tuple]
    distributions: dict[float, list[InstanceDistribution]]
    w2: dict[float, float]
    diagnostics: dict

    BER_HEADER = ("snr_db", "w2", "n_a", "t_c_us", "mean_ber", "ci95")
    FER_HEADER = ("snr_db", "n_f_bits", "n_a", "fer")
    THROUGHPUT_HEADER = ("snr_db", "n_f_bits", "n_a", "t_c_us", "throughput_bps")
    BP_HEADER = ("snr_db", "max_iters", "mean_ber", "ci95", "block_error_rate")

    def ber_table(self, n_a: int) -> list[tuple[float, float, float]]:
        """(snr, mean BER, ci95) rows for one read count."""
        return [(r[0], r[4], r[5]) for r in self.ber_rows if r[2] == n_a]

    def bp_table(self) -> list[tuple[float, float, float]]:
        return [(r[0], r[2], r[3]) for r in self.bp_rows]

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        (out / "instances").mkdir(parents=True, exist_ok=True)
        files = {
            "ber": out / "ber.csv",
            "fer": out / "fer.csv",
            "throughput": out / "throughput.csv",
            "w2_table": out / "w2_table.json",
            "manifest": out / "manifest.json",
        }
        files["ber"].write_text(_csv(self.BER_HEADER, self.ber_rows))
        files["fer"].write_text(_csv(self.FER_HEADER, self.fer_rows))
        files["throughput"].write_text(_csv(self.THROUGHPUT_HEADER, self.throughput_rows))
        if self.bp_rows:
            files["bp"] = out / "bp.csv"
            files["bp"].write_text(_csv(self.BP_HEADER, self.bp_rows))
        save_w2_table(self.w2, files["w2_table"])
        for k, (snr, dists) in enumerate(sorted(self.distributions.items())):
            p = out / "instances" / f"snr_{k:02d}.json"
            p.write_text(json.dumps({"snr_db": snr, "instances": [d.to_json() for d in dists]}) + "\n")
        files["manifest"].write_text(json.dumps(manifest(self.config, self.code, self.diagnostics), indent=1) + "\n")
        return files


def manifest(config, code: dict | None = None, extra: dict | None = None) -> dict:
    return {
        "config": to_dict(config) if config is not None else None,
        "code": code or {},
        "seed": getattr(config, "seed", None),
        "versions": {
            "qbp": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "kernel_backend": kernels.BACKEND,
        },
        "diagnostics": extra or {},
    }


def run_experiment(config: ExperimentConfig, out_dir=None, H: ParityCheckMatrix | None = None) -> ExperimentResult:
    """SNR sweep: decode N_ins instances per SNR, then tabulate BER, FER and
    throughput over the read-count grid.  Output is a pure function of the
    configuration, independent of the worker count."""
    H = H if H is not None else load_code(config)
    G = generator(H)
    frame_sizes = config.check_blocks(H.N)
    decoder = _decoder(H, config)
    a = config.anneal
    code = {"N": H.N, "M": H.M, "K": G.K, "girth": H.girth if H.girth != float("inf") else None,
            "redundant_checks": len(G.redundant_rows)}
    ber_rows, fer_rows, tp_rows, bp_rows = [], [], [], []
    dists_by_snr, w2s, diag = {}, {}, {}
    n_a_list = sorted(set(a.n_a))
    for si, snr in enumerate(_snr_points(config)):
        w2 = _w2_for(config, snr)
        w2s[snr] = w2
        inst = _make_instances(G, config, snr, config.frames.n_instances)
        dists, infos = _distributions(decoder, G, config, snr, si, inst, w2)
        dists_by_snr[snr] = dists
        broken = [i["broken_chain_fraction"] for i in infos if "broken_chain_fraction" in i]
        if broken:
            diag[f"broken_chain_fraction@{snr}"] = float(np.mean(broken))
        for n_a in n_a_list:
            m, ci = _mean_ci([ber(d, n_a, G.K) for d in dists])
            t_c = n_a * a.t_a_us
            ber_rows.append((snr, float(w2), n_a, float(t_c), m, ci))
            for nf in frame_sizes:
                fr = fer_details(dists, nf, H.N, n_a, config.frames.max_frames, _derive_seed(config.seed, 17, si, nf, n_a))
                fer_rows.append((snr, nf, n_a, fr.fer))
                n_k = nf * G.K / H.N
                tp_rows.append((snr, nf, n_a, float(t_c), throughput(n_k, t_c * 1e-6, fr.fer)))
                if not fr.exhaustive:
                    diag[f"fer_frames_sampled@{snr},{nf},{n_a}"] = fr.frames
        if config.bp_iters is not None:
            pos = G.message_positions
            errs, blocks = [], 0
            for d in inst:
                xh, _, _ = bp.decode(d.y, H, d.sigma2, config.bp_iters)
                e = int(np.sum(xh[pos] != d.codeword[pos]))
                errs.append(e / G.K)
                blocks += e > 0
            m, ci = _mean_ci(errs)
            bp_rows.append((snr, config.bp_iters, m, ci, blocks / len(inst)))
    result = ExperimentResult(config, code, ber_rows, fer_rows, tp_rows, bp_rows, dists_by_snr, w2s, diag)
    if out_dir is not None:
        result.write(out_dir)
    return result
