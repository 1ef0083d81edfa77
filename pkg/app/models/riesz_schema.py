"""
Riesz Schemas

Vector values of truncated and modified transforms, and the symmetrized
pair-sum report.
"""

from typing import Any, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator


class VectorValue(BaseModel):
    """Components of a transform value with its cached Euclidean norm."""
    model_config = ConfigDict(frozen=True)

    components: Tuple[float, ...]
    magnitude: float = 0.0

    @model_validator(mode="before")
    @classmethod
    def _cache_magnitude(cls, data: Any) -> Any:
        if isinstance(data, dict) and "components" in data:
            data = dict(data)
            data["magnitude"] = float(np.linalg.norm(np.asarray(data["components"], dtype=float)))
        return data

    @classmethod
    def from_array(cls, values) -> "VectorValue":
        return cls(components=tuple(float(v) for v in np.atleast_1d(values)))


class PairSumReport(BaseModel):
    """q_s of a labeled triple with its upper bound and the relabeling applied."""
    q: float
    bound: float
    permutation: List[int]
