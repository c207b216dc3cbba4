"""Command line: ``bplab run <config>``, ``bplab replay <record>``, ``bplab list-suites``."""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .records import ReplayMismatch, WitnessMissing
from .runner import exit_status, load_records, replay_record, run, table, write_report
from .suites import SUITES

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parser():
    ap = argparse.ArgumentParser(prog="bplab", description="Numerical checks for p-pseudofunction algebras "
                                 "and the algebras B_p(G) on finite groups.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the suites of a config file")
    r.add_argument("config")
    r.add_argument("--seed", type=int, default=None, help="override the config seed")
    r.add_argument("--threads", type=int, default=1, help="worker processes (results do not depend on it)")
    r.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    r.add_argument("--quiet", action="store_true")
    p = sub.add_parser("replay", help="recompute records from their stored witnesses")
    p.add_argument("record", help="a record file or a full report")
    p.add_argument("--check", default=None, help="only replay the record with this check id")
    sub.add_parser("list-suites", help="list the registered suites")
    return ap


def _run(args):
    try:
        cfg = load_config(args.config, seed=args.seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    report, timings = run(cfg, threads=max(1, args.threads))
    out = args.out or cfg.output["dir"]
    paths = write_report(report, timings, out, cfg.output["name"])
    if not args.quiet:
        sys.stdout.write(table(report))
        print(f"report: {paths['json']}")
    return exit_status(report)


def _replay(args):
    try:
        records = load_records(args.record)
    except (OSError, ValueError) as e:
        print(f"cannot read {args.record}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.check:
        records = [r for r in records if r.get("check") == args.check]
        if not records:
            print(f"no record with check id {args.check!r}", file=sys.stderr)
            return EXIT_CONFIG
    status = EXIT_OK
    for rec in records:
        name = rec.get("check", "?")
        try:
            v = replay_record(rec)
            print(f"{name}: {v.value}")
            if v.value == "FAIL":
                status = max(status, EXIT_FAIL)
        except WitnessMissing as e:
            print(f"{name}: WitnessMissing: {e}")
            status = EXIT_CONFIG
        except ReplayMismatch as e:
            print(f"{name}: ReplayMismatch: {e}")
            status = max(status, EXIT_FAIL)
    return status


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "run":
        return _run(args)
    if args.command == "replay":
        return _replay(args)
    for name, s in SUITES.items():
        print(f"{name:<20} {s.description}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
