"""
`opnorm` and `wolff` subcommands: Riesz operator norms and Wolff potentials.
"""

import argparse
import logging
from pathlib import Path

from app.config import MAX_EPS_BREAKPOINTS
from app.controllers.arguments import add_output_arguments, load_measure, parse_points, positive_float, run_config
from app.exceptions import ConfigError
from app.models.operator_schema import OperatorNormReport
from app.services.measure_service import CantorMeasure, CubeMeasure
from app.services.operator_service import (
    assemble_operator,
    cantor_theta_ratio,
    operator_norm_sup,
    power_norm,
    wolff_norm_ratio,
    wolff_report,
)
from app.services.results_service import ResultStore
from app.services.riesz_service import RieszContext

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    opnorm = subparsers.add_parser("opnorm", help="L2(mu) norm of the truncated Riesz operator")
    opnorm.add_argument("--measure", type=Path, required=True, help="measure JSON file")
    opnorm.add_argument("--s", type=positive_float, required=True)
    opnorm.add_argument("--eps", type=positive_float, default=None, help="fixed eps (default: sup over eps)")
    opnorm.add_argument("--tol", type=positive_float, default=1e-10)
    opnorm.add_argument(
        "--max-breakpoints", type=int, default=MAX_EPS_BREAKPOINTS,
        help="cap on the eps breakpoints of the sup (0: all; a cap is flagged)",
    )
    add_output_arguments(opnorm)
    opnorm.set_defaults(handler=handle_opnorm)

    wolff = subparsers.add_parser("wolff", help="Wolff potential, its support sup and energy")
    wolff.add_argument("--measure", type=Path, required=True, help="measure JSON file")
    wolff.add_argument("--s", type=positive_float, required=True)
    wolff.add_argument("--points", default="", help='query points "x1,x2;y1,y2"')
    wolff.add_argument("--norm-ratio", action="store_true", help="compare the squared operator norm with sup W")
    add_output_arguments(wolff)
    wolff.set_defaults(handler=handle_wolff)


def handle_opnorm(args: argparse.Namespace) -> int:
    mu = load_measure(args.measure)
    ctx = RieszContext(args.s, mu.d)
    if args.eps is not None:
        report, _ = power_norm(assemble_operator(mu, ctx, args.eps), args.tol)
    else:
        report = operator_norm_sup(mu, ctx, args.tol, args.max_breakpoints)
    side = {}
    flags = ["eps_subsampled"] if report.subsampled else []
    if isinstance(mu, CantorMeasure):
        side["theta.json"] = cantor_theta_ratio(mu, ctx, args.tol)
    target = ResultStore(args.output).save(
        "opnorm", run_config(args), [report], side_files=side, flags=flags, force=args.force,
        header=list(OperatorNormReport.model_fields),
    )
    print(f"|||R||| = {report.norm:.12g} at eps={report.eps:.6g} ({report.method}) -> {target}")
    return 0


def handle_wolff(args: argparse.Namespace) -> int:
    mu = load_measure(args.measure)
    ctx = RieszContext(args.s, mu.d)
    queries = parse_points(args.points, mu.d) if args.points else []
    report = wolff_report(mu, ctx, queries)
    records = [{"x": list(q), "wolff": w} for q, w in zip(queries, report.potential)]
    side = {"wolff.json": report}
    if args.norm_ratio:
        if not isinstance(mu, CubeMeasure):
            raise ConfigError("--norm-ratio needs a cube or Cantor measure")
        side["norm_ratio.json"] = wolff_norm_ratio(mu, ctx)
    target = ResultStore(args.output).save(
        "wolff", run_config(args), records, side_files=side, force=args.force,
        header=["x", "wolff"],
    )
    print(f"sup W = {report.sup_support:.12g}, energy = {report.energy:.12g} -> {target}")
    if report.note:
        print(f"note: {report.note}")
    return 0
