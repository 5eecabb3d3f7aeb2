"""Command line entry point."""

from __future__ import annotations

import argparse
import asyncio
from collections.abc import Sequence
import logging
from pathlib import Path
import sys

import colorlog

from .api import TtergmApi
from .config import COMMANDS, load_config
from .const import DOMAIN, EXIT_CONFIG, EXIT_DATA, EXIT_IO, EXIT_OK
from .exceptions import ConfigError, TtergmError
from .helpers import coerce_seed

_LOGGER = logging.getLogger(__name__)

LOG_FORMAT = "%(log_color)s%(asctime)s %(levelname)-8s %(name)s: %(message)s"

COMMAND_HELP = {
    "ingest": "parse an event log into monthly influence networks",
    "estimate": "fit a TERGM or TTERGM to a network directory",
    "simulate": "generate snapshots after the last observed one",
    "evaluate": "compare TTERGM, TERGM and the block model on holdout months",
}


def _seed(value: str) -> int:
    try:
        return coerce_seed(value)
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from err


def _threads(value: str) -> int:
    threads = int(value)
    if threads < 1:
        raise argparse.ArgumentTypeError(f"threads must be at least 1, got {value}")
    return threads


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser with one subcommand per pipeline stage."""

    parser = argparse.ArgumentParser(prog=DOMAIN, description="Temporal network models with triadic influencer terms.")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        stage = sub.add_parser(command, help=COMMAND_HELP[command], description=COMMAND_HELP[command])
        stage.add_argument("--config", type=Path, required=True, help="JSON run config")
        stage.add_argument(
            "--seed", type=_seed, default=None, help="global seed (unsigned 64-bit), overrides the config"
        )
        stage.add_argument("--out", type=Path, default=None, help="output directory, overrides the config")
        stage.add_argument("--threads", type=_threads, default=None, help="worker cap (default: available cores)")
    return parser


def setup_logging(level: str) -> None:
    """Send package logs to stderr through a colored formatter."""

    handler = colorlog.StreamHandler(sys.stderr)
    handler.setFormatter(colorlog.ColoredFormatter(LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
    logger = logging.getLogger(DOMAIN)
    for existing in list(logger.handlers):
        logger.removeHandler(existing)
    logger.addHandler(handler)
    logger.setLevel(level)


def main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand and return the process exit code.

    Exit codes: 0 success, 2 invalid config or arguments, 3 I/O failure,
    4 invalid data.
    """

    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config).with_overrides(seed=args.seed, output_dir=args.out, threads=args.threads)
        setup_logging(config.log_level)
        lines = asyncio.run(TtergmApi(config).async_run(args.command))
    except ConfigError as err:
        _LOGGER.error("Configuration error: %s", err)
        return EXIT_CONFIG
    except OSError as err:
        _LOGGER.error("I/O error: %s", err)
        return EXIT_IO
    except TtergmError as err:
        _LOGGER.error("%s failed: %s", args.command, err)
        return EXIT_DATA

    for line in lines:
        print(line)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
