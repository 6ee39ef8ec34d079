"""Command line entry point: ``greenspread {gen,run,sweep,check}``.

Exit codes: 0 success, 1 validation error (bad config, failed check),
2 runtime error (I/O, failed cell).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, config_from_dict, defaults_text, parse_config
from .engine import run_simulation
from .errors import ConfigError, ConfigParseError, SweepError
from .metrics import METRIC_NAMES
from .netgen import check_network
from .serialize import (RESULT_COLUMNS, load_network, iter_results, save_network,
                        write_config_echo, write_results)
from .sweep import aggregate, resolve_network, run_sweep

log = logging.getLogger("greenspread")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n\n{self.format_help()}")


def _global_flags(p, suppress):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", metavar="PATH", default=d, help="JSON run configuration")
    p.add_argument("--seed", type=int, metavar="N", default=d,
                   help="override every seed in the config (network, run, sweep base)")
    p.add_argument("--threads", type=int, metavar="N", default=d,
                   help="worker processes for sweep (fallback: $GREENSPREAD_THREADS, else 1)")
    p.add_argument("--out", metavar="PATH", default=d, help="output file (overrides config)")
    p.add_argument("-v", "--verbose", action="store_true", default=d)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="greenspread",
        description="Green-behaviour diffusion on bank-company multilayer networks.",
        epilog=defaults_text(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a network and write it as JSON")
    _global_flags(p, suppress=True)
    p = sub.add_parser("run", help="run one simulation")
    _global_flags(p, suppress=True)
    p = sub.add_parser("sweep", help="run a parameter grid")
    _global_flags(p, suppress=True)
    p.add_argument("--group-by", metavar="AXES", default=None,
                   help="comma-separated subset of alpha,delta,eip,eit,lt; writes "
                        "<out>.summary.csv with final-step mean/std per group")
    p.add_argument("--verify", action="store_true",
                   help="check GL bounds and per-node monotonicity for every run")
    p = sub.add_parser("check", help="validate a network JSON or results file")
    _global_flags(p, suppress=True)
    p.add_argument("files", nargs="+", metavar="FILE")
    return parser


def _load_config(args) -> RunConfig:
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("--config", f"readable file ({exc.strerror})", args.config)
        cfg = parse_config(text)
    else:
        cfg = config_from_dict({"grid": "full"} if args.command == "sweep" else {})
    if args.command == "sweep" and cfg.grid is None:
        raise ConfigError("grid", "present for the sweep command")
    if args.command == "run" and cfg.params is None:
        raise ConfigError("params", "present for the run command")
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get("GREENSPREAD_THREADS")
        try:
            n = int(env) if env else 1
        except ValueError:
            raise ConfigError("GREENSPREAD_THREADS", "positive integer", env) from None
    if n < 1:
        raise ConfigError("threads", "positive integer", n)
    return n


def cmd_gen(args) -> int:
    cfg = _load_config(args)
    if isinstance(cfg.network, str):
        raise ConfigError("network", "inline NetworkConfig for gen", cfg.network)
    out = Path(args.out or "network.json")
    net = resolve_network(cfg.network)
    save_network(net, out)
    log.info("wrote %s", out)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load_config(args)
    out = args.out or cfg.output_path
    net = resolve_network(cfg.network)
    traj = run_simulation(net, cfg.params)
    write_results(traj, out, cfg.output_format)
    write_config_echo(out, cfg.to_dict())
    log.info("wrote %s (%d rows)", out, len(traj))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = args.out or cfg.output_path
    result = run_sweep(cfg.grid, _threads(args), verify_states=args.verify)
    write_results(result, out, cfg.output_format)
    write_config_echo(out, cfg.to_dict())
    if args.group_by:
        axes = [a.strip() for a in args.group_by.split(",") if a.strip()]
        rows = aggregate(result, axes)
        summary = Path(str(out) + ".summary.csv")
        with open(summary, "w", encoding="utf-8") as fh:
            fh.write(",".join([*axes, "n", "final_mean", "final_std", "final_sem"]) + "\n")
            for r in rows:
                fh.write(",".join([*(repr(v) for v in r.key), str(r.n), repr(r.final_mean),
                                   repr(r.final_std), repr(r.final_sem)]) + "\n")
    log.info("wrote %s (%d rows)", out, len(result))
    return EXIT_OK


def check_results(path) -> list[str]:
    """Stream the file once; each run's rows must be contiguous and in step order."""
    problems = []
    seen: set[int] = set()
    current, prev = None, None
    for r in iter_results(path):
        rid = r["run_id"]
        for m in METRIC_NAMES:
            if not 0.0 <= r[m] <= 1.0:
                problems.append(f"run {rid} step {r['step']}: {m} outside [0,1]")
        if rid != current:
            if rid in seen:
                problems.append(f"run {rid}: rows not contiguous")
            seen.add(rid)
            current, prev = rid, None
            if r["step"] != 0:
                problems.append(f"run {rid}: first step is {r['step']}, not 0")
        elif r["step"] != prev["step"] + 1:
            problems.append(f"run {rid}: step {r['step']} follows {prev['step']}")
        if prev is not None:
            for m in METRIC_NAMES:
                if r[m] < prev[m]:
                    problems.append(f"run {rid}: {m} decreases at step {r['step']}")
        prev = r
    return problems


def cmd_check(args) -> int:
    failed = False
    for f in args.files:
        with open(f, encoding="utf-8") as fh:
            head = fh.read(64)
        if head.startswith('{"config"'):
            problems = check_network(load_network(f))
            kind = "network"
        elif head.startswith("{") or head.startswith(RESULT_COLUMNS[0]):
            problems = check_results(f)
            kind = "results"
        else:
            problems = ["unrecognised file type"]
            kind = "?"
        for p in problems:
            print(f"{f}: {p}")
        status = "FAIL" if problems else "ok"
        print(f"{f}: {kind} {status}")
        failed |= bool(problems)
    return EXIT_INVALID if failed else EXIT_OK


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "sweep": cmd_sweep, "check": cmd_check}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        msg = str(exc)
        first, _, rest = msg.partition("\n")
        print(first, file=sys.stderr)
        print(rest.strip(), file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ConfigParseError) as exc:
        print(f"greenspread: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, SweepError, ValueError, json.JSONDecodeError) as exc:
        print(f"greenspread: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
