"""
`capacity` subcommand: Wolff-energy and Riesz-energy capacity functionals.
"""

import argparse
import logging
from pathlib import Path

from app.config import QUAD_TOL
from app.controllers.arguments import add_output_arguments, load_measure, positive_float, run_config
from app.models.capacity_schema import CapacityFunctionalReport
from app.services.capacity_service import gamma_functional_from_measure, riesz_energy_comparison
from app.services.results_service import ResultStore
from app.services.riesz_service import RieszContext

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("capacity", help="capacity lower-bound functionals of a measure")
    parser.add_argument("--measure", type=Path, required=True, help="measure JSON file")
    parser.add_argument("--s", type=positive_float, required=True)
    parser.add_argument("--quad-tol", type=positive_float, default=QUAD_TOL)
    parser.add_argument("--compare-riesz", action="store_true", help="also compute ||I_alpha * mu||_3^3 (d = 1)")
    add_output_arguments(parser)
    parser.set_defaults(handler=handle_capacity)


def handle_capacity(args: argparse.Namespace) -> int:
    mu = load_measure(args.measure)
    ctx = RieszContext(args.s, mu.d)
    if args.compare_riesz:
        report = riesz_energy_comparison(mu, ctx, args.quad_tol)
    else:
        report = gamma_functional_from_measure(mu, ctx, args.quad_tol)
    target = ResultStore(args.output).save(
        "capacity", run_config(args), [report], side_files={"capacity.json": report}, force=args.force,
        header=list(CapacityFunctionalReport.model_fields),
    )
    print(f"functional = {report.functional:.12g} ({report.notes}) -> {target}")
    return 0
