"""``qbp`` command line: construct, encode, transmit, decode, embed, sample,
calibrate and evaluate.

Every command writes its outputs and a ``manifest.json`` into the output
directory (``--out-dir``, else ``$QBP_OUTPUT_DIR``, else ``./qbp-out``).
Exit codes: 0 success, 2 configuration or input error, 3 runtime failure.
Errors are reported on stderr as a single JSON object.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config

OUTPUT_ENV = "QBP_OUTPUT_DIR"
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(f"{self.prog}: {message}")


# --- helpers -----------------------------------------------------------------------


def _out_dir(args) -> Path:
    d = Path(args.out_dir or os.environ.get(OUTPUT_ENV) or "qbp-out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _need_file(path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{what} {path} not found")
    return p


def _bits(text: str) -> np.ndarray:
    s = text.replace(",", "").replace(" ", "")
    if not s or set(s) - {"0", "1"}:
        raise ConfigError(f"expected a bit string, got {text!r}")
    return np.array([int(c) for c in s], dtype=np.int8)


def _read_bits(value: str) -> np.ndarray:
    """A bit string, or a JSON file holding a list or {"codeword"|"bits": [...]}."""
    p = Path(value)
    if p.is_file():
        d = json.loads(p.read_text())
        if isinstance(d, dict):
            d = d.get("codeword", d.get("bits"))
        if not isinstance(d, list):
            raise ConfigError(f"{value}: no bit list found")
        return _bits("".join(str(int(b)) for b in d))
    return _bits(value)


def _load_code(path):
    from .ldpc import load_alist

    return load_alist(_need_file(path, "alist file"))


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=False) + "\n")


def _manifest(out: Path, command: str, args, seeds: dict | None = None, extra: dict | None = None, config=None):
    from .experiment import manifest

    m = manifest(config, None, extra)
    m["command"] = command
    m["arguments"] = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    m["seeds"] = seeds or {}
    _write_json(out / "manifest.json", m)


def _anneal(args):
    from .sampler import AnnealConfig

    return AnnealConfig(args.reads, args.sweeps, None, args.seed, args.anneal_time_us)


def _overrides(args, mapping: dict[str, str]) -> dict:
    out = {}
    for attr, key in mapping.items():
        v = getattr(args, attr, None)
        if v is not None:
            out[key] = list(v) if isinstance(v, (list, tuple)) else v
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, raw = item.split("=", 1)
        try:
            out[k] = json.loads(raw)
        except json.JSONDecodeError:
            out[k] = raw
    return out


# --- commands ----------------------------------------------------------------------


def cmd_construct(args) -> int:
    from .chimera import construct_qgem_code
    from .ldpc import CodeSpec, construct_regular_code, generator, save_alist

    out = _out_dir(args)
    if args.native_grid is not None:
        region = tuple(args.region) if args.region else None
        H, layout = construct_qgem_code(
            args.native_grid, args.level2, region, args.seed, args.allow_dangling
        )
        layout.save(out / "layout.json")
    else:
        if args.n is None:
            raise ConfigError("give --n (PEG construction) or --native-grid")
        H = construct_regular_code(
            CodeSpec(args.n, args.bit_degree, args.check_degree, args.seed, args.target_girth)
        )
    save_alist(H, out / "code.alist")
    G = generator(H)
    info = {"N": H.N, "M": H.M, "K": G.K, "girth": None if H.girth == float("inf") else H.girth}
    _write_json(out / "code.json", info)
    _manifest(out, "construct", args, {"seed": args.seed}, info)
    print(json.dumps(info))
    return 0


def cmd_encode(args) -> int:
    from .ldpc import encode, generator

    H = _load_code(args.alist)
    G = generator(H)
    if args.message is not None:
        u = _read_bits(args.message)
    else:
        u = np.random.default_rng(args.seed).integers(0, 2, G.K)
    if len(u) != G.K:
        raise ConfigError(f"message has {len(u)} bits; the code carries K={G.K}")
    x = encode(u, G)
    out = _out_dir(args)
    _write_json(out / "codeword.json", {"message": u.astype(int).tolist(), "codeword": x.astype(int).tolist(),
                                        "message_positions": G.message_positions.tolist()})
    _manifest(out, "encode", args, {"seed": args.seed})
    print("".join(map(str, x.tolist())))
    return 0


def cmd_transmit(args) -> int:
    from .channel import ChannelConfig, load_trace, modulate_bpsk, transmit

    x = _read_bits(args.codeword)
    if args.trace is not None:
        cfg = ChannelConfig(trace_snr_db=tuple(load_trace(_need_file(args.trace, "trace file"))), seed=args.seed)
    elif args.snr is not None:
        cfg = ChannelConfig(snr_db=args.snr, seed=args.seed)
    else:
        raise ConfigError("give --snr or --trace")
    rx = transmit(modulate_bpsk(x), cfg, args.trial)
    out = _out_dir(args)
    rx.to_csv(out / "received.csv")
    _manifest(out, "transmit", args, {"seed": args.seed, "trial": args.trial})
    return 0


def _received(path):
    from .channel import ReceivedVector

    return ReceivedVector.from_csv(_need_file(path, "received file"))


def cmd_decode_bp(args) -> int:
    from .bp import decode

    H = _load_code(args.alist)
    rx = _received(args.received)
    if len(rx.y) != H.N:
        raise ConfigError(f"received word has {len(rx.y)} values; the code has N={H.N}")
    x, iters, ok = decode(rx.y, H, rx.sigma2, args.iters)
    out = _out_dir(args)
    _write_json(out / "decoded.json", {"bits": x.astype(int).tolist(), "iterations": iters, "converged": ok})
    _manifest(out, "decode-bp", args)
    print("".join(map(str, x.tolist())))
    return 0


def cmd_decode_qbp(args) -> int:
    from .experiment import QbpDecoder
    from .ldpc import syndrome
    from .qubo import ObjectiveWeights

    H = _load_code(args.alist)
    rx = _received(args.received)
    if len(rx.y) != H.N:
        raise ConfigError(f"received word has {len(rx.y)} values; the code has N={H.N}")
    anneal = _anneal(args)
    if args.backend == "embedded":
        dec = QbpDecoder.embedded(H, args.grid, args.jferro, anneal, args.ice)
    else:
        dec = QbpDecoder(H, args.backend, anneal, ice_delta=args.ice)
    ss, info = dec.sample(rx.posterior(), ObjectiveWeights(args.w1, args.w2), args.seed)
    bits = ss.assignments[0, : H.N]
    out = _out_dir(args)
    _write_json(out / "samples.json", ss.to_json())
    result = {
        "bits": bits.astype(int).tolist(),
        "energy": float(ss.energies[0]),
        "valid_codeword": not bool(syndrome(bits, H).any()),
        **info,
    }
    _write_json(out / "decoded.json", result)
    _manifest(out, "decode-qbp", args, {"seed": args.seed})
    print("".join(map(str, bits.tolist())))
    return 0


def cmd_embed(args) -> int:
    from .chimera import ChimeraGraph, CodeLayout, capacity, embed_code, verify_embedding
    from .qubo import ObjectiveWeights, build_decoding_problem

    H = _load_code(args.alist)
    graph = ChimeraGraph(args.grid)
    if H.N > capacity(graph.num_qubits):
        raise RuntimeError(
            f"block length {H.N} exceeds the capacity {capacity(graph.num_qubits)} of a {args.grid}x{args.grid} grid"
        )
    layout = CodeLayout.load(_need_file(args.layout, "layout file")) if args.layout else None
    problem = build_decoding_problem(H, np.full(H.N, 0.5), ObjectiveWeights(1.0, 0.0))
    emb, hw = embed_code(problem, H, graph, args.jferro, layout)
    report = verify_embedding(emb, problem, graph)
    out = _out_dir(args)
    _write_json(out / "embedding.json", emb.to_json())
    emb.layout.save(out / "layout.json")
    summary = {
        "ok": report.ok,
        "qubits_used": report.qubits_used,
        "max_chain": {str(k): v for k, v in report.max_chain.items()},
        "level1_checks": len(emb.layout.level1),
        "level2_checks": len(emb.layout.level2),
        "chain_constant": hw.chain_constant,
    }
    _write_json(out / "report.json", summary)
    _manifest(out, "embed", args, extra=summary)
    print(json.dumps(summary))
    return 0 if report.ok else EXIT_RUNTIME


def cmd_sample(args) -> int:
    from .qubo import QuadraticBinaryProblem
    from .sampler import SampleSet, exhaustive_solve, simulated_anneal

    try:
        problem = QuadraticBinaryProblem.from_json(json.loads(_need_file(args.problem, "problem file").read_text()))
    except (KeyError, TypeError, json.JSONDecodeError) as e:
        raise ConfigError(f"{args.problem}: malformed problem ({e})") from None
    if args.exhaustive:
        rows, ground = exhaustive_solve(problem)
        ss = SampleSet.from_reads(rows, np.full(len(rows), ground), problem.convention)
    else:
        ss = simulated_anneal(problem, _anneal(args))
    out = _out_dir(args)
    _write_json(out / "samples.json", ss.to_json())
    _manifest(out, "sample", args, {"seed": args.seed})
    print(json.dumps({"lowest_energy": float(ss.energies[0]), "distinct": len(ss)}))
    return 0


_CONFIG_FLAGS = {
    "seed": "seed",
    "workers": "workers",
    "snr": "channel.snr_db",
    "w2": "weights.w2",
    "backend": "anneal.backend",
    "reads": "anneal.num_reads",
    "sweeps": "anneal.num_sweeps",
    "instances": "frames.n_instances",
}


def _experiment_config(args) -> ExperimentConfig:
    return load_config(_need_file(args.config, "config file"), _overrides(args, _CONFIG_FLAGS))


def cmd_calibrate(args) -> int:
    from .experiment import DEFAULT_JFERRO_GRID, DEFAULT_W2_GRID, calibrate_jferro, calibrate_w2, save_w2_table

    cfg = _experiment_config(args)
    out = _out_dir(args)
    if args.what == "w2":
        snrs = cfg.channel.snr_db
        cal = calibrate_w2(snrs, args.grid or DEFAULT_W2_GRID, cfg)
        save_w2_table(cal.table, out / "w2_table.json")
        _write_json(out / "w2_sweep.json", [list(r) for r in cal.sweep])
        extra = {"w2_trend_non_decreasing": cal.trend_non_decreasing()}
        print(json.dumps({repr(k): v for k, v in cal.table.items()}))
    else:
        cal = calibrate_jferro(args.grid or DEFAULT_JFERRO_GRID, cfg)
        _write_json(out / "jferro.json", {"best": cal.best, "sweep": [list(r) for r in cal.sweep]})
        extra = {"best_jferro": cal.best}
        print(json.dumps(extra))
    _manifest(out, "calibrate", args, {"seed": cfg.seed}, extra, cfg)
    return 0


def cmd_evaluate(args) -> int:
    from .experiment import run_experiment

    cfg = _experiment_config(args)
    out = _out_dir(args)
    res = run_experiment(cfg, out)
    print(json.dumps({"out_dir": str(out), "ber_rows": len(res.ber_rows), "fer_rows": len(res.fer_rows)}))
    return 0


# --- parser ------------------------------------------------------------------------


def _add_anneal(p):
    p.add_argument("--reads", type=int, default=100)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--anneal-time-us", type=float, default=1.0)


def _add_construct_args(p):
    p.add_argument("--n", type=int, help="block length for PEG construction")
    p.add_argument("--bit-degree", type=int, default=2)
    p.add_argument("--check-degree", type=int, default=3)
    p.add_argument("--target-girth", type=int)
    p.add_argument("--native-grid", type=int, help="co-design a code with a layout on an LxL Chimera grid")
    p.add_argument("--region", type=int, nargs=2, metavar=("W", "H"))
    p.add_argument("--level2", type=int, help="number of 3x3 ensemble checks")
    p.add_argument("--allow-dangling", action="store_true")
    p.set_defaults(func=cmd_construct)


def _common(seed_default: int | None) -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out-dir", help=f"output directory (default ${OUTPUT_ENV} or ./qbp-out)")
    seed_help = "override the config seed" if seed_default is None else None
    common.add_argument("--seed", type=int, default=seed_default, help=seed_help)
    common.add_argument("-v", "--verbose", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common(0)
    config_common = _common(None)

    parser = _Parser(prog="qbp", description="LDPC decoding by quadratic binary optimization")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    _add_construct_args(sub.add_parser("construct", parents=[common], help="build a parity-check matrix"))
    code = sub.add_parser("code", help="code utilities")
    code_sub = code.add_subparsers(dest="code_command", required=True, parser_class=_Parser)
    _add_construct_args(code_sub.add_parser("construct", parents=[common]))

    p = sub.add_parser("encode", parents=[common], help="encode a message")
    p.add_argument("--alist", required=True)
    p.add_argument("--message", help="bit string or JSON file; random when omitted")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("transmit", parents=[common], help="BPSK over AWGN")
    p.add_argument("--codeword", required=True, help="bit string or JSON file")
    p.add_argument("--snr", type=float)
    p.add_argument("--trace", help="file with one subcarrier SNR (dB) per line")
    p.add_argument("--trial", type=int, default=0)
    p.set_defaults(func=cmd_transmit)

    p = sub.add_parser("decode-bp", parents=[common], help="min-sum belief propagation")
    p.add_argument("--alist", required=True)
    p.add_argument("--received", required=True)
    p.add_argument("--iters", type=int, default=10)
    p.set_defaults(func=cmd_decode_bp)

    p = sub.add_parser("decode-qbp", parents=[common], help="decode by energy minimization")
    p.add_argument("--alist", required=True)
    p.add_argument("--received", required=True)
    p.add_argument("--backend", choices=("exhaustive", "sa", "embedded"), default="sa")
    p.add_argument("--w1", type=float, default=1.0)
    p.add_argument("--w2", type=float, required=True)
    p.add_argument("--jferro", type=float, default=8.0)
    p.add_argument("--grid", type=int, default=16)
    p.add_argument("--ice", type=float, help="std of Gaussian noise on biases and couplers")
    _add_anneal(p)
    p.set_defaults(func=cmd_decode_qbp)

    p = sub.add_parser("embed", parents=[common], help="embed a code on a Chimera grid")
    p.add_argument("--alist", required=True)
    p.add_argument("--grid", type=int, default=16)
    p.add_argument("--layout", help="placement sidecar JSON")
    p.add_argument("--jferro", type=float, default=8.0)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("sample", parents=[common], help="sample a problem JSON")
    p.add_argument("--problem", required=True)
    p.add_argument("--exhaustive", action="store_true")
    _add_anneal(p)
    p.set_defaults(func=cmd_sample)

    for name, func in (("calibrate", cmd_calibrate), ("evaluate", cmd_evaluate)):
        p = sub.add_parser(name, parents=[config_common], help=f"{name} from an experiment config")
        p.add_argument("--config", required=True)
        p.add_argument("--workers", type=int)
        p.add_argument("--snr", type=float, nargs="+")
        p.add_argument("--w2", type=float)
        p.add_argument("--backend", choices=("exhaustive", "sa", "embedded"))
        p.add_argument("--reads", type=int)
        p.add_argument("--sweeps", type=int)
        p.add_argument("--instances", type=int)
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (dotted path)")
        if name == "calibrate":
            p.add_argument("--what", choices=("w2", "jferro"), default="w2")
            p.add_argument("--grid", type=float, nargs="+")
        p.set_defaults(func=func)
    return parser


def _fail(code: int, exc: BaseException) -> int:
    kind = "config_error" if code == EXIT_CONFIG else "runtime_error"
    print(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgError as e:
        return _fail(EXIT_CONFIG, e)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        return _fail(EXIT_CONFIG, e)
    except Exception as e:  # noqa: BLE001 - every failure maps to an exit code
        return _fail(EXIT_RUNTIME, e)


if __name__ == "__main__":
    sys.exit(main())
