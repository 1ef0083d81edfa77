"""
Critical-Size Schemas

Query and CSV record models for the content scale M solving the defining
integral equation.
"""

import math
from typing import Any

from pydantic import BaseModel, ConfigDict, field_validator


class MhQuery(BaseModel):
    """One evaluation of M(kappa, N) for a gauge h and exponent s."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    h: Any
    s: float
    kappa: float
    N: float = math.inf

    @field_validator("s", "kappa")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("must be positive")
        return value

    @field_validator("N")
    @classmethod
    def _at_least_two(cls, value: float) -> float:
        if not value >= 2:
            raise ValueError("N must be >= 2 (or inf)")
        return value

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.N)


class MhRecord(BaseModel):
    """CSV row of the `mh` subcommand."""
    beta_or_gauge_id: str
    s: float
    d: int
    kappa: float
    N: float
    M: float
    residual: float
