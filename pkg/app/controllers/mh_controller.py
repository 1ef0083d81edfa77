"""
`mh` subcommand: the critical size M(kappa, N) for one gauge.
"""

import argparse
import logging
import math

from app.config import MH_TOL
from app.controllers.arguments import (
    add_gauge_arguments,
    add_output_arguments,
    count_or_inf,
    load_gauge,
    positive_float,
    run_config,
)
from app.exceptions import ConfigError
from app.models.mh_schema import MhQuery, MhRecord
from app.services.gauge_service import PowerGauge
from app.services.mh_service import doubling_ratio, mh_function, power_gauge_mh, sandwich_mh, solve_mh_with_residual
from app.services.results_service import ResultStore

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("mh", help="solve for the critical size M(kappa, N)")
    add_gauge_arguments(parser)
    parser.add_argument("--s", type=positive_float, required=True)
    parser.add_argument("--d", type=int, required=True)
    parser.add_argument("--kappa", type=positive_float, required=True)
    parser.add_argument("--N", type=count_or_inf, default=math.inf, help="number of atoms or inf")
    parser.add_argument("--tol", type=positive_float, default=MH_TOL)
    parser.add_argument("--solver", action="store_true", help="use the root solver even for power gauges")
    parser.add_argument("--doubling", action="store_true", help="also report M(2kappa, 2N)/M(kappa, N)")
    parser.add_argument("--sandwich", type=positive_float, default=None, metavar="C",
                        help="also solve the threshold form with constant C")
    add_output_arguments(parser)
    parser.set_defaults(handler=handle_mh)


def handle_mh(args: argparse.Namespace) -> int:
    h = load_gauge(args, args.d)
    if not 0 < args.s < args.d:
        raise ConfigError(f"s must lie in (0, d={args.d}), got {args.s}")
    if isinstance(h, PowerGauge) and not args.solver:
        M = power_gauge_mh(h.beta, args.s, args.kappa, args.N)
        residual = abs(mh_function(MhQuery(h=h, s=args.s, kappa=args.kappa, N=args.N), M) - 1.0)
    else:
        M, residual = solve_mh_with_residual(MhQuery(h=h, s=args.s, kappa=args.kappa, N=args.N), args.tol)
    record = MhRecord(
        beta_or_gauge_id=h.label or h.kind,
        s=args.s,
        d=args.d,
        kappa=args.kappa,
        N=args.N,
        M=M,
        residual=residual,
    )
    side = {}
    if args.doubling and not math.isinf(args.N):
        side["doubling.json"] = {"ratio": doubling_ratio(h, args.s, args.kappa, args.N, args.tol)}
    if args.sandwich is not None and not math.isinf(args.N):
        side["sandwich.json"] = {"M": sandwich_mh(h, args.s, args.kappa, args.N, args.sandwich), "c": args.sandwich}
    target = ResultStore(args.output).save("mh", run_config(args), [record], side_files=side, force=args.force)
    print(f"M = {M:.17g} (residual {residual:.3g}) -> {target}")
    return 0
