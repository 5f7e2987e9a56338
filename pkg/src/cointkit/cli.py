"""Command-line entry point: ``cointkit run`` and ``cointkit simulate``."""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .data import MarketPanel, write_panel_csv
from .errors import CointkitError, ConfigurationError, ParseError
from .report import FORMATS, TESTS, AnalysisConfig, run_pipeline, write_report
from .simulate import generate, load_dgp_spec

EXIT_OK, EXIT_ANALYSIS, EXIT_USAGE = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cointkit", description="Market integration test pipeline.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the analysis pipeline on a price CSV")
    run.add_argument("--input", help="price CSV (first column 'date')")
    run.add_argument("--config", help="JSON analysis configuration")
    run.add_argument("--out", help="output directory")
    run.add_argument("--format", choices=FORMATS)
    run.add_argument("--seed", type=int)
    run.add_argument("--only", action="append", choices=TESTS, metavar="TEST",
                     help=f"restrict to one test block (repeatable): {', '.join(TESTS)}")
    run.add_argument("--workers", type=int, help="threads for GH grids and causality cells")
    run.add_argument("--profiles", action="store_true", default=None, help="also write GH profile CSVs")

    sim = sub.add_parser("simulate", help="generate a panel from a JSON DGP spec")
    sim.add_argument("--spec", required=True)
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--as-prices", action="store_true",
                     help="write 100*exp(x) instead of the simulated log levels")
    return ap


def _run(args) -> int:
    cfg = AnalysisConfig.load(args.config) if args.config else AnalysisConfig()
    cfg = cfg.replace(input=args.input, output=args.out, format=args.format, seed=args.seed,
                      workers=args.workers, profiles=args.profiles,
                      tests=tuple(args.only) if args.only else None)
    if cfg.output is None:
        raise ConfigurationError("no output directory (use --out or the 'output' key)")
    doc = run_pipeline(cfg)
    try:
        write_report(doc, cfg.output, cfg.format, cfg.profiles)
    except OSError as exc:
        print(f"cointkit: cannot write report: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for b in doc.blocks:
        if b.error:
            print(f"cointkit: block {b.key} failed: {b.error}", file=sys.stderr)
    return EXIT_ANALYSIS if doc.failed else EXIT_OK


def _simulate(args) -> int:
    spec = load_dgp_spec(args.spec)
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    panel = generate(spec)
    if args.as_prices:
        panel = MarketPanel(panel.names, panel.calendar, 100.0 * np.exp(panel.values),
                            panel.provenance + ("prices",))
    write_panel_csv(panel, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _run(args) if args.command == "run" else _simulate(args)
    except (ConfigurationError, ParseError) as exc:
        print(f"cointkit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"cointkit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CointkitError as exc:
        print(f"cointkit: analysis failed: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
