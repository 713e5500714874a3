"""Command-line front door.

Exit status: 0 when every verdict passes, 1 when a verdict fails, 2 for
invalid input (bad flags, configs or models) and 3 for runtime errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ergolab import __version__
from ergolab.core import word_str
from ergolab.errors import ValidationError
from ergolab.experiments import run_experiment
from ergolab.models import load_model
from ergolab.recode import dump_codebooks
from ergolab.reports import FORMATS, emit_reports

EXIT_PASS, EXIT_VERDICT, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2, 3


def _common(p: argparse.ArgumentParser, *flags):
    if "model" in flags:
        p.add_argument("--model", metavar="PATH", help="model description file (JSON)")
    if "scheme" in flags:
        p.add_argument("--scheme", metavar="NAME", action="append",
                       help="plugin, lz78, returntime or freq (repeatable; freq:0 picks the symbol)")
    if "length" in flags:
        p.add_argument("--length", metavar="N", type=int, help="path or block length")
    if "trials" in flags:
        p.add_argument("--trials", metavar="T", type=int, help="number of sampled paths")
    if "epsilon" in flags:
        p.add_argument("--epsilon", metavar="E", type=float, help="tolerance or typicality slack")
    p.add_argument("--seed", metavar="S", type=int, help="master seed (default 0)")
    p.add_argument("--out", metavar="DIR", help="write report files here")
    p.add_argument("--format", choices=FORMATS, help="report format (default text)")
    p.add_argument("--config", metavar="PATH", help="JSON config; flags override its fields")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ergolab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a path from a model")
    _common(p, "model", "length")

    p = sub.add_parser("estimate", help="convergence report of observation schemes")
    _common(p, "model", "scheme", "length", "trials", "epsilon")
    p.add_argument("--grid", metavar="N", type=int, nargs="+", help="lengths (default: --length only)")
    p.add_argument("--tolerance", metavar="X", type=float, help="allowed distance from the exact rate")

    p = sub.add_parser("smb", help="-(1/n) log2 mu along sampled paths")
    _common(p, "model", "length", "trials", "epsilon")

    p = sub.add_parser("relative-smb", help="relative typical sets of a joint model")
    _common(p, "model", "length", "epsilon")
    p.add_argument("--grid", metavar="N", type=int, nargs="+", help="block lengths")
    p.add_argument("--min-coverage", type=float, help="required coverage at the largest length")

    p = sub.add_parser("decompose", help="tower decomposition of a sampled path")
    _common(p, "model", "length", "epsilon")
    p.add_argument("--height", type=int, help="minimum (kakutani) or exact (rohlin) tower height")
    p.add_argument("--method", choices=("kakutani", "rohlin"), help="decomposition kind")
    p.add_argument("--pattern", help="base pattern for kakutani towers (digits)")

    p = sub.add_parser("recode", help="recode and decode a joint path column by column")
    _common(p, "model", "length", "epsilon")
    p.add_argument("--heights", type=int, nargs="+", help="tower heights (default 32 64)")
    p.add_argument("--k", type=int, help="output alphabet size (default 16)")
    p.add_argument("--codebook", metavar="PATH", help="also write the codebook interchange file")

    p = sub.add_parser("transplant", help="relabel tower columns with names drawn from a product model")
    _common(p, "model", "length")
    p.add_argument("--tower-height", type=int, help="tower height L (default 4096)")
    p.add_argument("--block", type=int, help="block length N of the comparison (default 6)")
    p.add_argument("--delta", type=float, help="allowed excess l1 distance (default 0.05)")
    p.add_argument("--identity", action="store_true", help="use the identity conditional")

    p = sub.add_parser("experiment", help="run a multi-step scenario from a config file")
    _common(p)
    return parser


def _read_config(path):
    if path is None:
        return {}, None
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    return data, Path(path).resolve().parent


def _set(cfg, key, value):
    if value is not None:
        cfg[key] = value


def config_from_args(args) -> tuple:
    cfg, base = _read_config(args.config)
    cmd = args.command
    kind = {
        "estimate": "entropy-convergence", "smb": "smb", "relative-smb": "relative-smb",
        "decompose": "decompose", "recode": "recode-roundtrip", "transplant": "transplant",
    }.get(cmd)
    if kind:
        cfg["experiment"] = kind
    if getattr(args, "model", None):
        cfg.pop("models", None)
        cfg["model"] = str(Path(args.model).resolve())
    _set(cfg, "seed", args.seed)
    _set(cfg, "epsilon", getattr(args, "epsilon", None))
    _set(cfg, "trials", getattr(args, "trials", None))
    length = getattr(args, "length", None)
    if cmd == "estimate":
        if args.scheme:
            cfg["schemes"] = args.scheme
        if args.grid:
            cfg["n_grid"] = args.grid
        elif length is not None:
            cfg["n_grid"] = [length]
        if args.tolerance is not None:
            cfg["tolerance"] = args.tolerance
    elif cmd == "relative-smb":
        if args.grid:
            cfg["n_grid"] = args.grid
        elif length is not None:
            cfg["n_grid"] = [length]
        _set(cfg, "min_coverage", args.min_coverage)
    else:
        _set(cfg, "length", length)
    if cmd == "decompose":
        _set(cfg, "height", args.height)
        _set(cfg, "method", args.method)
        _set(cfg, "pattern", args.pattern)
    if cmd == "recode":
        _set(cfg, "heights", args.heights)
        _set(cfg, "k", args.k)
    if cmd == "transplant":
        _set(cfg, "tower_height", args.tower_height)
        _set(cfg, "block_length", args.block)
        _set(cfg, "delta", args.delta)
        if args.identity:
            cfg["conditional"] = "identity"
    return cfg, base


def _simulate(args) -> int:
    cfg, base = _read_config(args.config)
    model_ref = args.model or cfg.get("model")
    if model_ref is None:
        raise ValidationError("simulate needs --model")
    if isinstance(model_ref, str) and base is not None and not Path(model_ref).is_absolute() and not args.model:
        model_ref = str(base / model_ref)
    model = load_model(model_ref)
    n = args.length if args.length is not None else cfg.get("length")
    if not isinstance(n, int) or n < 1:
        raise ValidationError("simulate needs --length >= 1")
    x = model.sample(n, args.seed if args.seed is not None else cfg.get("seed", 0))
    lines = [word_str(x)] if not isinstance(x, tuple) else [word_str(x[0]), word_str(x[1])]
    text = "\n".join(lines) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sample.txt").write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_PASS


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    try:
        if args.command == "simulate":
            return _simulate(args)
        cfg, base = config_from_args(args)
        if args.command == "experiment" and args.config is None:
            raise ValidationError("experiment needs --config")
        out = args.out or cfg.get("out")
        if out is not None and args.out is None and base is not None:
            out = str(base / out)
        fmt = args.format or cfg.get("format", "text")
        report = run_experiment(cfg, base)
        if args.command == "recode" and args.codebook:
            Path(args.codebook).write_text(dump_codebooks(report.artifacts["codebooks"]))
        text = emit_reports(report, fmt, out)
        if out is None:
            sys.stdout.write(text)
        else:
            sys.stdout.write(emit_reports(report, "text"))
        return EXIT_PASS if report.passed else EXIT_VERDICT
    except ValidationError as exc:
        print(f"ergolab: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # every other failure is a runtime error
        print(f"ergolab: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
