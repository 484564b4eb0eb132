"""Command line entry point: ``spikelab <subcommand>``.

Exit status is 0 when every check passes, 1 when any fails and 2 on a
configuration or runtime error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import harness
from .errors import ConfigError

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment configuration (JSON)")
    common.add_argument("--seed", type=int, help="master seed, overrides the config")
    common.add_argument("--out", help="output directory, overrides the config")
    common.add_argument("--trials", type=int, help="trial count, overrides the config")
    common.add_argument("--threads", type=int, help="worker processes (default: available cores)")
    p = argparse.ArgumentParser(prog="spikelab", description="Spiked sample covariance experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("laws", parents=[common], help="tabulate the limiting-law functions to CSV")
    sub.add_parser("simulate", parents=[common], help="spectra and overlaps for one configuration")
    c = sub.add_parser("check", parents=[common], help="run one named check, or all configured checks")
    c.add_argument("name", help=f"'all' or one of: {', '.join(harness.CHECK_NAMES)}")
    sub.add_parser("sweep", parents=[common], help="run the configured sweep")
    i = sub.add_parser("infer", parents=[common], help="spike inference from a spectrum or data CSV")
    i.add_argument("input", help="CSV file")
    i.add_argument("--kind", choices=("spectrum", "data"), default="spectrum",
                   help="one eigenvalue per row, or an M x N data matrix")
    sub.add_parser("universality", parents=[common], help="compare two entry laws")
    return p


def _config(args):
    cfg = harness.load_config(args.config) if args.config else harness.parse_config({"schema_version": 1})
    over = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer", "--seed")
        over["seed"] = args.seed
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("must be at least 1", "--trials")
        over["trials"] = args.trials
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("must be at least 1", "--threads")
        over["threads"] = args.threads
    if args.out is not None:
        over["out"] = args.out
    return replace(cfg, **over) if over else cfg


def run(argv=None):
    args = _parser().parse_args(argv)
    cfg = _config(args)
    out = cfg.out
    if args.command == "laws":
        harness.tabulate_laws(cfg, out)
        print(f"tables written to {out}/tables")
        return EXIT_PASS
    if args.command == "simulate":
        harness.simulate(cfg, out)
        print(f"simulated {cfg.trials} trials into {out}")
        return EXIT_PASS
    if args.command == "check":
        reports, payload = harness.run_experiment(cfg, args.name, out)
        for r in reports:
            print(r.summary_line())
        return EXIT_PASS if payload["pass"] else EXIT_FAIL
    if args.command == "sweep":
        for row in harness.run_sweep(cfg, out):
            print(f"{row[0]}={row[1]:g} {row[2]}={row[3]:.4g} (se {row[4]:.2g})")
        return EXIT_PASS
    if args.command == "universality":
        report, payload = harness.run_universality(cfg, out)
        print(report.summary_line())
        return EXIT_PASS if payload["pass"] else EXIT_FAIL
    if args.command == "infer":
        result = harness.infer(cfg, args.input, args.kind, out)
        print(f"{len(result['spikes'])} supercritical spike(s); report in {out}/report.json")
        return EXIT_PASS
    return EXIT_ERROR


def main(argv=None):
    try:
        return run(argv)
    except (ConfigError, ValueError, OSError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
