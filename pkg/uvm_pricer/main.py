import argparse
import json
import logging
import sys
from typing import List, Optional

import ray

from uvm_pricer.cli.runner import run
from uvm_pricer.config import LOG_FORMAT, LOG_LEVEL, PROJECT_NAME

# Configure logging
logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT)
logger = logging.getLogger("main")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uvm-pricer",
        description=(
            f"{PROJECT_NAME}: worst-case option prices under uncertain "
            "volatility and correlation"
        ),
    )
    commands = parser.add_subparsers(dest="mode", required=True)
    for mode, help_text in (
        ("price", "Price one configuration"),
        ("sweep", "Price every N x P cell"),
        ("bench", "Compare engine prices with independent benchmarks"),
    ):
        command = commands.add_parser(mode, help=help_text)
        command.add_argument(
            "--config", type=str, default=None, help="YAML experiment file"
        )
        command.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="Override a dotted configuration key (repeatable)",
        )
        command.add_argument(
            "--out", type=str, default=None, help="Output path (default: stdout)"
        )
        command.add_argument(
            "--format", choices=("csv", "json"), default=None, help="Output format"
        )
        command.add_argument("--seed", type=int, default=None, help="Master seed")
        command.add_argument(
            "--jobs", type=int, default=None, help="Ray workers for per-point solves"
        )
        command.add_argument(
            "--no-timings", action="store_true", help="Omit wall-clock columns"
        )
    return parser


def overrides_from_args(args: argparse.Namespace) -> List[str]:
    overrides = [f"mode={args.mode}", *args.overrides]
    if args.out is not None:
        overrides.append(f"output.path={json.dumps(args.out)}")
    if args.format is not None:
        overrides.append(f"output.format={args.format}")
    if args.seed is not None:
        overrides.append(f"algo.seed={args.seed}")
    if args.jobs is not None:
        overrides.append(f"algo.workers={args.jobs}")
    if args.no_timings:
        overrides.append("output.timings=false")
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logger.info(f"Starting {args.mode}", extra={"config": args.config})
    try:
        return run(args.config, overrides_from_args(args))
    finally:
        if ray.is_initialized():
            ray.shutdown()


if __name__ == "__main__":
    sys.exit(main())
