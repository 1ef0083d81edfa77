"""
`cartan-upper`, `cartan-lower` and `large-s` subcommands, driven by a JSON config.
"""

import argparse
import logging

from app.controllers.arguments import add_output_arguments, add_trial_arguments, load_experiment_config
from app.models.experiment_schema import CartanUpperRecord, LargeSRecord, LevelStat
from app.services.experiment_service import (
    bounded_regime_trend,
    cartan_lower_experiment,
    cartan_upper_experiment,
    large_s_experiment,
)
from app.services.results_service import ResultStore

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    upper = subparsers.add_parser("cartan-upper", help="superlevel content against M_h per measure family")
    add_trial_arguments(upper)
    upper.add_argument("--trend", action="store_true", help="also fit the N -> inf regime over N_grid")
    add_output_arguments(upper)
    upper.set_defaults(handler=handle_cartan_upper)

    lower = subparsers.add_parser("cartan-lower", help="Monte Carlo lower estimate on the random construction")
    add_trial_arguments(lower)
    add_output_arguments(lower)
    lower.set_defaults(handler=handle_cartan_lower)

    large = subparsers.add_parser("large-s", help="superlevel content for s >= d")
    add_trial_arguments(large)
    add_output_arguments(large)
    large.set_defaults(handler=handle_large_s)


def _config_key(command: str, cfg) -> dict:
    return {"command": command, "config": cfg.model_dump(mode="json")}


def handle_cartan_upper(args: argparse.Namespace) -> int:
    cfg = load_experiment_config(args.config, args.seed)
    records = cartan_upper_experiment(cfg)
    side = {}
    if args.trend:
        trend_records, trend = bounded_regime_trend(cfg)
        side["trend.json"] = {**trend.model_dump(), "bounded": trend.bounded}
        side["trend.csv"] = trend_records
    flags = [f"{r.family}:{r.config_index}:P={r.P:g}" for r in records if r.flagged]
    target = ResultStore(args.output).save(
        "cartan-upper", _config_key("cartan-upper", cfg), records, seed=cfg.seed, side_files=side,
        flags=flags, force=args.force, header=list(CartanUpperRecord.model_fields),
    )
    for family in cfg.families:
        ratios = [r.ratio for r in records if r.family == family]
        print(f"{family}: max ratio {max(ratios):.6g} over {len(ratios)} runs")
    print(f"-> {target}")
    return 3 if flags else 0


def handle_cartan_lower(args: argparse.Namespace) -> int:
    cfg = load_experiment_config(args.config, args.seed)
    result = cartan_lower_experiment(cfg, args.workers)
    summary = result.model_dump(exclude={"level_stats"})
    flags = [] if result.delta_star > 0 else ["delta_star=0"]
    target = ResultStore(args.output).save(
        "cartan-lower", _config_key("cartan-lower", cfg), result.level_stats, seed=cfg.seed,
        side_files={"summary.json": summary}, flags=flags, force=args.force,
        header=list(LevelStat.model_fields),
    )
    print(
        f"delta_star = {result.delta_star:.4f} (95% CI [{result.ci_low:.4f}, {result.ci_high:.4f}]), "
        f"m = {result.m}, content in [{result.content_lower:.6g}, {result.content_upper:.6g}] -> {target}"
    )
    return 3 if flags else 0


def handle_large_s(args: argparse.Namespace) -> int:
    cfg = load_experiment_config(args.config, args.seed)
    records = large_s_experiment(cfg)
    flags = [f"{r.family}:N={r.N}:P={r.P:g}" for r in records if r.flagged]
    target = ResultStore(args.output).save(
        "large-s", _config_key("large-s", cfg), records, seed=cfg.seed, flags=flags, force=args.force,
        header=list(LargeSRecord.model_fields),
    )
    if records:
        ratios = [r.ratio for r in records]
        print(f"ratio in [{min(ratios):.6g}, {max(ratios):.6g}] over {len(records)} runs -> {target}")
    return 3 if flags else 0
