"""
Results Service

Writes command outputs to results/<command>/<config hash>/: a records CSV
with a fixed header, optional JSON side files and a manifest. Nothing
time-dependent is written, so a rerun with the same config and seed
reproduces every byte.
"""

import csv
import hashlib
import json
import logging
import math
import shutil
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pydantic
import scipy
from pydantic import BaseModel

from app.config import APP_VERSION, FLOAT_DIGITS, RESULTS_DIR
from app.exceptions import OutputCollisionError
from app.models.experiment_schema import RunManifest

logger = logging.getLogger(__name__)

RECORDS_FILE = "records.csv"
MANIFEST_FILE = "manifest.json"


def format_value(value: Any) -> str:
    """CSV cell text; floats carry FLOAT_DIGITS significant digits."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, f".{FLOAT_DIGITS}g")
    if isinstance(value, (list, tuple)):
        return " ".join(format_value(v) for v in value)
    if value is None:
        return ""
    return str(value)


def config_hash(config: Dict[str, Any]) -> str:
    """First 16 hex digits of the SHA-256 of the canonical JSON form."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def package_versions() -> Dict[str, str]:
    return {
        "lab": APP_VERSION,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
    }


def _rows(records: Sequence[Any]) -> List[Dict[str, Any]]:
    return [r.model_dump() if isinstance(r, BaseModel) else dict(r) for r in records]


def write_csv(path: Path, records: Sequence[Any], header: Optional[Sequence[str]] = None) -> None:
    rows = _rows(records)
    if header is None:
        header = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(row.get(key)) for key in header])


def write_json(path: Path, data: Any) -> None:
    if isinstance(data, BaseModel):
        data = data.model_dump()
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(data, handle, sort_keys=True, indent=2, allow_nan=True)
        handle.write("\n")


class ResultStore:
    """Artifact directory for one command run."""

    def __init__(self, root: Path = RESULTS_DIR):
        self.root = Path(root)

    def run_dir(self, command: str, config: Dict[str, Any]) -> Path:
        return self.root / command / config_hash(config)

    def save(
        self,
        command: str,
        config: Dict[str, Any],
        records: Sequence[Any],
        seed: Optional[int] = None,
        side_files: Optional[Dict[str, Any]] = None,
        flags: Sequence[str] = (),
        force: bool = False,
        header: Optional[Sequence[str]] = None,
    ) -> Path:
        """
        Write records.csv, side files and manifest.json.

        Raises:
            OutputCollisionError: the run directory exists and force is False
        """
        target = self.run_dir(command, config)
        if target.exists():
            if not force:
                raise OutputCollisionError(f"{target} already exists; pass --force to overwrite")
            shutil.rmtree(target)
        target.mkdir(parents=True)
        write_csv(target / RECORDS_FILE, records, header)
        files = [RECORDS_FILE]
        for name, data in sorted((side_files or {}).items()):
            if name.endswith(".csv"):
                write_csv(target / name, data)
            else:
                write_json(target / name, data)
            files.append(name)
        manifest = RunManifest(
            command=command,
            config_hash=config_hash(config),
            seed=seed,
            versions=package_versions(),
            files=files,
            flags=list(flags),
        )
        write_json(target / MANIFEST_FILE, manifest)
        logger.info("wrote %d records to %s", len(records), target)
        return target
