"""
Content Schemas

Upper/lower Hausdorff-content brackets and diagnostic reports on dyadic cells.
"""

from typing import Dict

from pydantic import BaseModel, Field


class ContentBracket(BaseModel):
    """Dyadic covering cost (upper) against normalized Frostman mass (lower)."""
    upper: float
    lower: float
    gauge_id: str
    metadata: Dict[str, float] = Field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.lower / self.upper if self.upper > 0 else 0.0


class NormalityReport(BaseModel):
    """Cells failing the ball-growth normality test and their share of covering cost."""
    t1: float
    t2: float
    rho: float
    excluded_cells: int
    excluded_cost: float
    total_cost: float

    @property
    def fraction(self) -> float:
        return self.excluded_cost / self.total_cost if self.total_cost > 0 else 0.0
