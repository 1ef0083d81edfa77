"""
Operator Schemas

Reports for the L2(mu) Riesz operator norm and Wolff potentials.
"""

from typing import List, Optional

from pydantic import BaseModel, Field


class OperatorNormReport(BaseModel):
    """Norm of one eps-truncated operator (or the sup over eps breakpoints)."""
    norm: float
    eps: float
    method: str = "power"
    iterations: int = 0
    residual: float = 0.0
    breakpoints: int = 1
    breakpoints_total: int = 1
    subsampled: bool = False


class WolffReport(BaseModel):
    """Pointwise W^mu values, their sup over the support sample and the energy."""
    potential: List[float] = Field(default_factory=list)
    sup_support: float
    energy: float
    support_points: int
    infinite: bool = False
    note: Optional[str] = None


class WeakTypeReport(BaseModel):
    """eta{R_* > t} * t / ||nu|| over a t-grid."""
    t_grid: List[float]
    mass_above: List[float]
    scaled: List[float]

    @property
    def max_scaled(self) -> float:
        return max(self.scaled) if self.scaled else 0.0
