"""
Riesz-Cartan Laboratory

Command-line entry point. Each controller registers its subcommands; errors
map to exit codes (0 success, 2 configuration, 3 numerical).
Run: python main.py <command> [options]
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from app.config import APP_VERSION, LOG_LEVEL
from app.controllers import capacity_controller, content_controller, experiment_controller, mh_controller
from app.controllers import operator_controller, riesz_controller
from app.exceptions import ConfigError, LabError

logger = logging.getLogger("lab")

CONTROLLERS = (
    mh_controller,
    riesz_controller,
    operator_controller,
    content_controller,
    capacity_controller,
    experiment_controller,
)


class LabArgumentParser(argparse.ArgumentParser):
    """argparse that raises ConfigError instead of exiting."""

    def error(self, message: str):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = LabArgumentParser(prog="lab", description="Riesz transform and Cartan-estimate laboratory")
    parser.add_argument("--version", action="version", version=f"%(prog)s {APP_VERSION}")
    parser.add_argument("--log-level", default=LOG_LEVEL, help="DEBUG, INFO, WARNING or ERROR")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=LabArgumentParser)
    for controller in CONTROLLERS:
        controller.register(subparsers)
    return parser


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Parse, dispatch and map failures to exit codes."""
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except ValidationError as exc:
        err = exc.errors()[0]
        detail = f"{'.'.join(map(str, err['loc']))}: {err['msg']}"
        print(f"error: {detail}", file=sys.stderr)
        return ConfigError.exit_code
    except LabError as exc:
        logger.error("%s failed: %s", args.command, exc.detail)
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(run_cli())
