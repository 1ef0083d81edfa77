"""
Shared command-line helpers: output options, point lists and file loaders.
"""

import argparse
import hashlib
import json
import math
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
from pydantic import ValidationError

from app.config import RESULTS_DIR, TRIAL_WORKERS
from app.exceptions import ConfigError
from app.models.experiment_schema import ExperimentConfig
from app.models.gauge_schema import GaugeSpec
from app.services.gauge_service import GaugeFunction, gauge_from_spec
from app.services.measure_service import measure_from_json

# argparse attributes that do not change what a run computes
NON_CONFIG_KEYS = {"handler", "force", "output", "workers", "command", "log_level"}


def positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def count_or_inf(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def add_output_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output", type=Path, default=RESULTS_DIR, help="results root directory")
    parser.add_argument("--force", action="store_true", help="overwrite an existing run directory")


def add_gauge_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--gauge", help="power:<beta>")
    group.add_argument("--gauge-file", type=Path, help="JSON gauge spec (power or table)")


def read_json(path: Path) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc.msg} (line {exc.lineno})") from exc


def validation_message(exc: ValidationError, prefix: str = "") -> str:
    err = exc.errors()[0]
    where = ".".join(str(part) for part in err["loc"])
    return f"{prefix}{where}: {err['msg']}" if where else f"{prefix}{err['msg']}"


def load_gauge(args: argparse.Namespace, d: int) -> GaugeFunction:
    try:
        if getattr(args, "gauge_file", None):
            spec = GaugeSpec.model_validate(read_json(args.gauge_file))
        else:
            spec = GaugeSpec.parse(args.gauge)
    except ValidationError as exc:
        raise ConfigError(validation_message(exc, "gauge.")) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return gauge_from_spec(spec, d)


def load_measure(path: Path):
    return measure_from_json(read_json(path))


def load_experiment_config(path: Path, seed: Optional[int] = None) -> ExperimentConfig:
    """Validate the config file; any failure names the offending field."""
    data = read_json(path)
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    if seed is not None:
        data = {**data, "seed": seed}
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(validation_message(exc)) from exc


def parse_points(text: str, d: int) -> np.ndarray:
    """``"x1,x2;y1,y2"`` -> array of shape (k, d)."""
    try:
        rows = [[float(v) for v in row.split(",")] for row in text.split(";") if row.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse points '{text}'") from exc
    if any(len(row) != d for row in rows):
        raise ConfigError(f"every point needs {d} coordinates")
    return np.asarray(rows, dtype=float).reshape(-1, d)


def _file_key(path: Path) -> str:
    """Path plus a digest of its bytes, so edited inputs get a new run directory."""
    try:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()[:16]
    except OSError:
        digest = "missing"
    return f"{path}#{digest}"


def run_config(args: argparse.Namespace) -> Dict[str, Any]:
    """Everything that determines the outputs, keyed for hashing."""
    return {
        key: (_file_key(value) if isinstance(value, Path) else value)
        for key, value in sorted(vars(args).items())
        if key not in NON_CONFIG_KEYS
    }


def add_trial_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, required=True, help="experiment JSON file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--workers", type=int, default=TRIAL_WORKERS, help="trial processes")
