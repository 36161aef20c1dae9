"""The mems_touchdown CLI."""
from __future__ import annotations

import argparse
import importlib
import logging
from typing import Sequence

from . import __version__
from .numerics import GapClosedError, NumericalFailure, ValidationError
from .run_helpers import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION

logger = logging.getLogger("cli")

HANDLER_NAME = "mems_touchdown.console"

subcommands = [
    "evolve_run",
    "branch_run",
    "folds_run",
    "epscrit_run",
    "phaseplane_run",
    "inner_run",
    "composite_run",
    "sweep_run",
]


def build_argparser() -> argparse.ArgumentParser:
    """Load subparsers from available subcommands."""
    parser = argparse.ArgumentParser(
        prog="mems_touchdown",
        description="Dynamics, equilibria and asymptotics of regularized MEMS models.")

    subparsers = parser.add_subparsers(required=True)
    for command in subcommands:
        importlib.import_module(f"{__package__}.{command}").create_subparser(subparsers)

    parser.add_argument(
        '--version', action='version', version=__version__, help="Print package version")
    parser.add_argument('--debug', action='store_true', help="Enable debug logging")

    return parser


def setup_logger(debug: bool = False) -> None:
    """Output all loggers to console with custom format at level INFO or DEBUG."""
    formatter = logging.Formatter('%(asctime)s - %(levelname)s - %(message)s')

    # log from all loggers to stderr, once per process
    root_logger = logging.getLogger()
    root_logger.setLevel(logging.INFO)
    if not any(h.get_name() == HANDLER_NAME for h in root_logger.handlers):
        console_handler = logging.StreamHandler()
        console_handler.set_name(HANDLER_NAME)
        console_handler.setFormatter(formatter)
        root_logger.addHandler(console_handler)

    if debug:
        root_logger.setLevel(logging.DEBUG)


def main(argv: Sequence[str] | None = None) -> int:
    """CLI entry-point, returning the process exit code."""
    parser = build_argparser()
    args = parser.parse_args(argv)
    setup_logger(debug=args.debug)

    try:
        args.func(args)
    except (ValidationError, GapClosedError) as e:
        logger.error(f"{args.command}: invalid parameters: {e}")
        return EXIT_VALIDATION
    except NumericalFailure as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
