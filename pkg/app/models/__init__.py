"""
Models Package

Pydantic schemas for specifications, queries, reports and CSV records.
"""

# Gauges
from app.models.gauge_schema import GaugeSpec, FinitenessReport

# Critical size
from app.models.mh_schema import MhQuery, MhRecord

# Measures
from app.models.measure_schema import AtomSpec, CantorSpec

# Riesz transforms
from app.models.riesz_schema import VectorValue, PairSumReport

# Operators and Wolff potentials
from app.models.operator_schema import OperatorNormReport, WolffReport, WeakTypeReport

# Content
from app.models.content_schema import ContentBracket, NormalityReport

# Capacity
from app.models.capacity_schema import CapacityFunctionalReport

# Experiments
from app.models.experiment_schema import (
    WindowSpec,
    ExperimentConfig,
    CartanUpperRecord,
    LargeSRecord,
    LevelStat,
    CartanLowerResult,
    TrendReport,
    RunManifest,
)

__all__ = [
    # Gauges
    "GaugeSpec",
    "FinitenessReport",
    # Critical size
    "MhQuery",
    "MhRecord",
    # Measures
    "AtomSpec",
    "CantorSpec",
    # Riesz transforms
    "VectorValue",
    "PairSumReport",
    # Operators
    "OperatorNormReport",
    "WolffReport",
    "WeakTypeReport",
    # Content
    "ContentBracket",
    "NormalityReport",
    # Capacity
    "CapacityFunctionalReport",
    # Experiments
    "WindowSpec",
    "ExperimentConfig",
    "CartanUpperRecord",
    "LargeSRecord",
    "LevelStat",
    "CartanLowerResult",
    "TrendReport",
    "RunManifest",
]
