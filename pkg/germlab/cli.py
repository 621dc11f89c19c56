"""
Command-Line Entry Point
Combines the build, invariants and verify commands
"""
import argparse
import logging
import sys
from typing import List, Optional

from .commands import build, invariants, verify
from .config import Settings, settings
from .exceptions import GermlabError, InvalidInputError

logger = logging.getLogger(__name__)

COMMANDS = (build, invariants, verify)

INVALID_INPUT_EXIT = InvalidInputError.exit_code


def add_common_options(parser: argparse.ArgumentParser) -> None:
    """Options shared by every command"""
    parser.add_argument("--t", type=float, default=settings.DEFAULT_SCALE, help="section scale, 0 < t <= 1")
    parser.add_argument("--resolution", type=int, default=settings.DEFAULT_RESOLUTION, help="grid cells per t")
    parser.add_argument("--seed", type=int, default=0, help="random seed (GERMLAB_SEED overrides)")
    parser.add_argument("--out", default=None, help="output path; stdout when omitted")
    parser.add_argument("--knot-table", dest="knot_table", default=None, help="alternative knot table file")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--timings", action="store_true", help="record runtimes in reports")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description="Sections, invariants and verified constructions of surface germs",
    )
    parser.add_argument("--version", action="version", version=f"{settings.APP_NAME} {settings.APP_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        sub = command.add_parser(subparsers)
        add_common_options(sub)
        sub.set_defaults(handler=command.handle)
    return parser


def configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose or settings.DEBUG else getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command; 0 = success, 1 = failed check or computation, 2 = bad input"""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    env_seed = Settings().GERMLAB_SEED
    if env_seed is not None:
        logger.debug(f"seed {args.seed} overridden by GERMLAB_SEED={env_seed}")
        args.seed = env_seed

    try:
        return args.handler(args)
    except GermlabError as exc:
        logger.error(exc.detail)
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:
        logger.error(f"{args.command} stopped on an unexpected {type(exc).__name__}: {exc}", exc_info=args.verbose)
        print(f"error: unexpected {type(exc).__name__}: {exc}", file=sys.stderr)
        return INVALID_INPUT_EXIT


if __name__ == "__main__":
    sys.exit(main())
