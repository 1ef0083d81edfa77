"""
Controllers Package

Command-line subcommands, one module per group. Each module exposes
``register(subparsers)``, which adds its parsers and binds a handler.
"""

from app.controllers import (
    capacity_controller,
    content_controller,
    experiment_controller,
    mh_controller,
    operator_controller,
    riesz_controller,
)

__all__ = [
    "mh_controller",
    "riesz_controller",
    "operator_controller",
    "content_controller",
    "capacity_controller",
    "experiment_controller",
]
