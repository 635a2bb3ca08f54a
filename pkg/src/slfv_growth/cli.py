"""Command-line entry point for the experiment harness."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import BudgetExceeded, ConfigError, InvariantViolation
from .harness import build_config, EXPERIMENTS, parse_config_file, run


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slfv-growth",
        description="Growth-speed experiments for the elliptical-event spatial model",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in EXPERIMENTS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--reps", type=int, help="replica count")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, help="parallel worker count")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override any config key (repeatable)",
        )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        raw = parse_config_file(args.config) if args.config else {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            key, val = item.split("=", 1)
            raw[key.strip()] = val.strip()
        if args.seed is not None:
            raw["seed"] = str(args.seed)
        if args.reps is not None:
            raw["reps"] = str(args.reps)
        if args.out is not None:
            raw["out"] = args.out
        if args.workers is not None:
            raw["workers"] = str(args.workers)
        cfg = build_config(args.kind, raw)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    try:
        result = run(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except BudgetExceeded as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return 2
    except InvariantViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return 3
    print(json.dumps(result, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
