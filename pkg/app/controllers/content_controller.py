"""
`content` subcommand: dyadic content bracket of a Riesz superlevel set.
"""

import argparse
import logging
from pathlib import Path

from app.controllers.arguments import (
    add_gauge_arguments,
    add_output_arguments,
    load_gauge,
    load_measure,
    positive_float,
    run_config,
)
from app.exceptions import ConfigError
from app.models.experiment_schema import WindowSpec
from app.services.content_service import SUPERLEVEL_MODES, content_bracket, superlevel_cells
from app.services.measure_service import CubeMeasure
from app.services.results_service import ResultStore
from app.services.riesz_service import RieszContext

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("content", help="content bracket of a Riesz superlevel set")
    parser.add_argument("--measure", type=Path, required=True, help="measure JSON file")
    parser.add_argument("--s", type=positive_float, required=True)
    add_gauge_arguments(parser)
    parser.add_argument("--P", type=positive_float, required=True, help="threshold")
    parser.add_argument("--window-corner", required=True, help='root cube corner "x1,x2"')
    parser.add_argument("--window-side", type=positive_float, required=True)
    parser.add_argument("--depth", type=int, default=10)
    parser.add_argument("--mode", choices=SUPERLEVEL_MODES, default="maximal")
    parser.add_argument("--eps", type=positive_float, default=None, help="radius for fixed_eps mode")
    parser.add_argument("--dump-cells", action="store_true", help="also write the marked cell centers")
    add_output_arguments(parser)
    parser.set_defaults(handler=handle_content)


def handle_content(args: argparse.Namespace) -> int:
    nu = load_measure(args.measure)
    if isinstance(nu, CubeMeasure):
        nu = nu.atom_surrogate()
    try:
        corner = [float(v) for v in args.window_corner.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse window corner '{args.window_corner}'") from exc
    ctx = RieszContext(args.s, nu.d)
    h = load_gauge(args, nu.d)
    window = WindowSpec(corner=corner, side=args.window_side)
    cells = superlevel_cells(nu, ctx, args.P, window, args.depth, args.mode, args.eps)
    summary = {"upper": 0.0, "lower": 0.0, "depth": args.depth, "cells": cells.count, "gauge": h.label or h.kind}
    if cells.count:
        bracket = content_bracket(cells, h)
        summary.update(upper=bracket.upper, lower=bracket.lower)
    side = {"content.json": summary}
    if args.dump_cells:
        side["cells.csv"] = [{"center": list(c)} for c in cells.centers()]
    target = ResultStore(args.output).save("content", run_config(args), [summary], side_files=side, force=args.force)
    print(f"content in [{summary['lower']:.8g}, {summary['upper']:.8g}] over {cells.count} cells -> {target}")
    if cells.touches_boundary():
        logger.warning("marked cells touch the window boundary; enlarge the window")
        return 3
    return 0
