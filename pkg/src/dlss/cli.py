"""Command-line entry point: ``dlss run|sweep|oracle|check``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, load_config, gen_initial_data
from .runner import (
    DEFAULT_LADDER,
    EXIT_CONDITION_NOT_MET,
    EXIT_PASS,
    load_grid,
    oracle_compare,
    oracle_csv,
    run_experiment,
    sweep,
)
from .theory import check_condition
from .wiener import wiener_norm

EXIT_USAGE = 1


def _ladder(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad ladder {text!r}") from exc
    if not vals or min(vals) < 0:
        raise argparse.ArgumentTypeError("ladder entries must be non-negative integers")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dlss", description="Spectral simulation and certification of thin-film flows.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="run configuration file")
    common.add_argument("--seed", type=int, help="override [run] seed")
    common.add_argument("--csv", help="write CSV here (default: [output] csv_path, else stdout for tables)")
    common.add_argument("--quiet", action="store_true", help="suppress the text report")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="integrate and certify one trajectory")
    sw = sub.add_parser("sweep", parents=[common], help="map the admissibility region over a parameter grid")
    sw.add_argument("grid", help="grid file with a [grid] section")
    sw.add_argument("--jobs", type=int, default=1, help="worker processes for certified runs")
    sw.add_argument("--certify", action="store_true", help="also run a short certified integration per admissible point")
    orc = sub.add_parser("oracle", parents=[common], help="compare Taylor and rational right-hand sides")
    orc.add_argument("--ladder", type=_ladder, default=DEFAULT_LADDER, help="comma-separated Taylor orders")
    sub.add_parser("check", parents=[common], help="report the smallness condition only")
    return p


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 is reserved for "condition not met"
        return EXIT_PASS if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if args.command == "run":
            if args.csv:
                cfg = cfg.with_csv(args.csv)
            outcome = run_experiment(cfg)
            if not args.quiet:
                print(outcome.summary())
            return outcome.exit_code
        if args.command == "check":
            u0 = gen_initial_data(cfg.init, cfg.lattice, cfg.run.seed)
            report = check_condition(cfg.model, wiener_norm(u0, 0), cfg.run.sigma_fraction)
            if not args.quiet:
                print(report.to_text())
            return EXIT_PASS if report.admissible else EXIT_CONDITION_NOT_MET
        if args.command == "oracle":
            u0 = gen_initial_data(cfg.init, cfg.lattice, cfg.run.seed)
            _emit(oracle_csv(oracle_compare(u0, cfg.model, args.ladder)), args.csv)
            return EXIT_PASS
        if args.command == "sweep":
            if args.jobs < 1:
                raise ConfigError("--jobs must be at least 1")
            grid = load_grid(Path(args.grid).read_text())
            if args.certify:
                grid = replace(grid, certify=True)
            _emit(sweep(cfg, grid, args.jobs), args.csv)
            return EXIT_PASS
    except (ConfigError, OSError, ValueError) as exc:
        print(f"dlss: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
