"""
Experiment Schemas

Configuration file model for the randomized experiments, their CSV records
and the run manifest written next to every artifact.
"""

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config import DEFAULT_TRIALS, DELTA_GRID
from app.models.gauge_schema import GaugeSpec


class WindowSpec(BaseModel):
    """Axis-aligned root cube of the dyadic grid."""
    corner: List[float]
    side: float = Field(gt=0)


class ExperimentConfig(BaseModel):
    """
    One experiment, read from a JSON file.

    The seed determines every random draw: trial k uses the stream spawned
    from (seed, k), independent of the worker count.
    """
    model_config = ConfigDict(extra="forbid")

    gauge: GaugeSpec
    s: float = Field(gt=0)
    d: int = Field(ge=1, le=3)
    N: int = Field(default=8, ge=1)
    n: int = Field(default=6, ge=1, le=16)
    M: float = Field(default=1.0, gt=0)
    eta: float = Field(default=1.0, gt=0)
    P_grid: List[float] = Field(default_factory=lambda: [1.0])
    window: Optional[WindowSpec] = None
    depth: int = Field(default=10, ge=1, le=20)
    trials: int = Field(default=DEFAULT_TRIALS, ge=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    families: List[Literal["uniform", "clustered", "cantor", "separated", "one_point"]] = Field(
        default_factory=lambda: ["uniform", "clustered", "cantor"]
    )
    configurations: int = Field(default=4, ge=1)
    N_grid: List[int] = Field(default_factory=list)
    separation: float = Field(default=1e6, gt=0)
    quantile: float = Field(default=0.5, gt=0, lt=1)
    delta_grid: int = Field(default=DELTA_GRID, ge=2)

    @model_validator(mode="after")
    def _check_experiment(self) -> "ExperimentConfig":
        if any(p <= 0 for p in self.P_grid) or not self.P_grid:
            raise ValueError("P_grid must hold positive thresholds")
        if self.window is not None and len(self.window.corner) != self.d:
            raise ValueError(f"window.corner must have d={self.d} coordinates")
        if any(n < 2 for n in self.N_grid):
            raise ValueError("N_grid entries must be >= 2")
        return self


class CartanUpperRecord(BaseModel):
    family: str
    config_index: int
    N: int
    P: float
    norm_nu: float
    content_upper: float
    mh: float
    ratio: float
    cells: int
    retried: bool = False
    flagged: bool = False


class LargeSRecord(BaseModel):
    family: str
    N: int
    P: float
    norm_nu: float
    content_upper: float
    bound: float
    ratio: float
    cells: int
    flagged: bool = False


class LevelStat(BaseModel):
    """Empirical max |xi_k| and Var xi_k of one construction level, against theta."""
    k: int
    j_k: int
    theta: float
    max_abs: float
    variance: float
    max_ratio: float
    var_ratio: float


class CartanLowerResult(BaseModel):
    delta_star: float
    ci_low: float
    ci_high: float
    content_lower: float
    content_upper: float
    theta_norm: float
    m: int
    J: List[int]
    trials: int
    level_stats: List[LevelStat]


class TrendReport(BaseModel):
    """Least-squares slope of log(quantity) against log N."""
    slope: float
    stderr: float
    intercept: float
    points: int

    @property
    def bounded(self) -> bool:
        return self.slope <= 3 * self.stderr


class RunManifest(BaseModel):
    """Written beside each artifact; no timestamps so reruns are byte-identical."""
    command: str
    config_hash: str
    seed: Optional[int] = None
    versions: Dict[str, str]
    files: List[str]
    flags: List[str] = Field(default_factory=list)
