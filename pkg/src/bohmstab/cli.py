"""Command-line entry point.

    bohmstab run <config.json> [--set k=v]... [--out DIR] [--threads N] [--no-plot]
    bohmstab verify <quick|full> [--out DIR] [--threads N]
    bohmstab inspect <snapshot.chpf>

Exit codes: 0 success, 1 verify suite failures, 2 validation error,
3 numerical failure.  Physics parameters come only from configs and
overrides; environment variables are never consulted.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, chpf
from .artifacts import parse_override, set_by_path, write_manifest
from .errors import ConfigError, NumericsError


def _cmd_run(args) -> int:
    path = Path(args.config)
    if not path.exists():
        print(f"error: config file {path} does not exist", file=sys.stderr)
        return 2
    try:
        with open(path) as fh:
            config = json.load(fh)
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return 2
    try:
        for expr in args.set or []:
            key, value = parse_override(expr)
            set_by_path(config, key, value)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(args.out) if args.out else path.parent / (path.stem + "_out")
    from .experiments import run_experiment, validate_config

    started = time.time()
    try:
        validate_config(config)
        summary = run_experiment(config, out_dir, threads=args.threads,
                                 plot=not args.no_plot)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, NumericsError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 3
    write_manifest(out_dir, config, time.time() - started, __version__)
    print(json.dumps({"out_dir": str(out_dir), "summary": summary},
                     indent=2, sort_keys=True, default=float))
    return 0


def _cmd_verify(args) -> int:
    from .verify import run_suite

    out_dir = Path(args.out) if args.out else Path.cwd()
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / f"verify_{args.suite}.json"
    started = time.time()
    report = run_suite(args.suite, threads=args.threads, out_path=report_path)
    elapsed = time.time() - started
    n_pass = sum(1 for c in report["checks"] if c["passed"])
    print(f"{n_pass}/{len(report['checks'])} checks passed "
          f"({elapsed:.1f}s); report: {report_path}")
    return 0 if report["all_passed"] else 1


def _cmd_inspect(args) -> int:
    path = Path(args.snapshot)
    if not path.exists():
        print(f"error: {path} does not exist", file=sys.stderr)
        return 2
    try:
        header = chpf.read_header(path)
        field = chpf.read_field(path)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    kind = "complex" if header["kind"] == chpf.KIND_COMPLEX else "real"
    v = field.values
    from .grids import norm_sq

    info = {
        "path": str(path),
        "version": header["version"],
        "dim": header["dim"],
        "points": list(header["points"]),
        "bounds": [list(b) for b in header["bounds"]],
        "payload": kind,
        "min_abs": float(np.min(np.abs(v))),
        "max_abs": float(np.max(np.abs(v))),
        "norm_sq": norm_sq(field),
        "sidecar": chpf.read_sidecar(path),
    }
    print(json.dumps(info, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bohmstab",
        description="Pilot-wave stability toolkit: evolution, residual checks, "
                    "classical stability, and stochastic resonance experiments.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a JSON config")
    run_p.add_argument("config")
    run_p.add_argument("--set", action="append", metavar="PATH=VALUE",
                       help="override a config entry (dotted path, JSON value)")
    run_p.add_argument("--out", help="output directory (default: <config>_out)")
    run_p.add_argument("--threads", type=int, default=1)
    run_p.add_argument("--no-plot", action="store_true",
                       help="skip figure rendering")
    run_p.set_defaults(func=_cmd_run)

    ver_p = sub.add_parser("verify", help="run an acceptance suite")
    ver_p.add_argument("suite", choices=["quick", "full"])
    ver_p.add_argument("--out", help="directory for the report JSON")
    ver_p.add_argument("--threads", type=int, default=1)
    ver_p.set_defaults(func=_cmd_verify)

    ins_p = sub.add_parser("inspect", help="print a snapshot header and norms")
    ins_p.add_argument("snapshot")
    ins_p.set_defaults(func=_cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
