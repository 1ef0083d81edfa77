"""
`riesz` subcommand: pointwise transforms of a discrete measure and the
random-triple check of the symmetrized pair sum.
"""

import argparse
import logging
from pathlib import Path

import numpy as np

from app.config import EVAL_CHUNK
from app.controllers.arguments import add_output_arguments, load_measure, parse_points, positive_float, run_config
from app.exceptions import ConfigError
from app.services.measure_service import CubeMeasure
from app.services.results_service import ResultStore
from app.services.riesz_service import (
    RieszContext,
    maximal_transform_many,
    modified_transform_many,
    pair_sum_batch,
    truncated_transform_many,
)
from app.services.trial_service import trial_rng

logger = logging.getLogger(__name__)

MODES = ("truncated", "maximal", "modified")


def register(subparsers) -> None:
    parser = subparsers.add_parser("riesz", help="evaluate s-Riesz transforms of a discrete measure")
    parser.add_argument("--s", type=positive_float, required=True)
    parser.add_argument("--d", type=int, required=True)
    parser.add_argument("--measure", type=Path, help="measure JSON file (atoms, cantor spec or lebesgue cube)")
    parser.add_argument("--points", help='evaluation points "x1,x2;y1,y2"')
    parser.add_argument("--mode", choices=MODES, default="maximal")
    parser.add_argument("--eps", type=float, default=None, help="truncation radius (truncated/modified)")
    parser.add_argument("--pair-trials", type=int, default=0, help="random triples for the pair-sum check")
    parser.add_argument("--seed", type=int, default=0)
    add_output_arguments(parser)
    parser.set_defaults(handler=handle_riesz)


def _pair_check(s: float, d: int, trials: int, seed: int) -> dict:
    rng = trial_rng(seed, 0)
    violations, worst = 0, 0.0
    for start in range(0, trials, EVAL_CHUNK):
        size = min(EVAL_CHUNK, trials - start)
        X, Y, Z = (rng.standard_normal((size, d)) for _ in range(3))
        q, bound = pair_sum_batch(X, Y, Z, s)
        violations += int(np.sum(q > bound))
        worst = max(worst, float(np.max(q / bound)))
    return {"trials": trials, "violations": violations, "max_ratio": worst}


def csv_header(d: int) -> list:
    """x1..xd, eps, r1..rd, magnitude; eps reads "sup" and the r columns stay blank in maximal mode."""
    return [f"x{i}" for i in range(1, d + 1)] + ["eps"] + [f"r{i}" for i in range(1, d + 1)] + ["magnitude"]


def _record(x, value, mode: str, eps) -> dict:
    row = {f"x{i}": float(c) for i, c in enumerate(x, start=1)}
    if mode == "maximal":
        row.update(eps="sup", magnitude=float(value))
        return row
    row["eps"] = float(eps)
    row.update({f"r{i}": float(c) for i, c in enumerate(value, start=1)})
    row["magnitude"] = float(np.linalg.norm(value))
    return row


def handle_riesz(args: argparse.Namespace) -> int:
    ctx = RieszContext(args.s, args.d)
    records, side = [], {}
    if args.measure:
        if not args.points:
            raise ConfigError("--points is required with --measure")
        nu = load_measure(args.measure)
        if isinstance(nu, CubeMeasure):
            nu = nu.atom_surrogate()
        points = parse_points(args.points, args.d)
        if args.mode == "maximal":
            values = maximal_transform_many(nu, ctx, points)
        elif args.eps is None or args.eps <= 0:
            raise ConfigError(f"--eps > 0 is required for mode {args.mode}")
        elif args.mode == "truncated":
            values = truncated_transform_many(nu, ctx, points, args.eps)
        else:
            values = modified_transform_many(nu, ctx, points, args.eps)
        for x, value in zip(points, values):
            records.append(_record(x, value, args.mode, args.eps))
    if args.pair_trials > 0:
        side["pair_check.json"] = _pair_check(args.s, args.d, args.pair_trials, args.seed)
        print(f"pair sum: {side['pair_check.json']['violations']} violations in {args.pair_trials} triples")
    if not records and not side:
        raise ConfigError("nothing to do: give --measure/--points or --pair-trials")
    target = ResultStore(args.output).save(
        "riesz", run_config(args), records, seed=args.seed, side_files=side, force=args.force,
        header=csv_header(args.d),
    )
    print(f"riesz: {len(records)} points -> {target}")
    return 3 if side.get("pair_check.json", {}).get("violations", 0) else 0
