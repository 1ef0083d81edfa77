"""
Measure Schemas

Exchange formats for point masses and corner Cantor specifications.
"""

from typing import List

from pydantic import BaseModel, ConfigDict, Field, model_validator


class AtomSpec(BaseModel):
    """One point mass ``{"x": [...], "w": weight}``."""
    x: List[float]
    w: float


class CantorSpec(BaseModel):
    """Corner Cantor construction: edge lengths ell_0..ell_n and the ratio bound lambda."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    d: int = Field(ge=1)
    ell: List[float] = Field(min_length=1)
    lam: float = Field(default=0.499, alias="lambda", gt=0, lt=0.5)

    @model_validator(mode="after")
    def _check_lengths(self) -> "CantorSpec":
        if any(length <= 0 for length in self.ell):
            raise ValueError("ell entries must be positive")
        for k in range(len(self.ell) - 1):
            if not self.ell[k + 1] < self.lam * self.ell[k]:
                raise ValueError(
                    f"ell[{k + 1}]={self.ell[k + 1]:g} must be < lambda*ell[{k}]={self.lam * self.ell[k]:g}"
                )
        return self

    @property
    def n(self) -> int:
        return len(self.ell) - 1

    @classmethod
    def geometric(cls, d: int, ratio: float, n: int, ell0: float = 1.0, lam: float = 0.499) -> "CantorSpec":
        """ell_k = ell0 * ratio^k, k = 0..n."""
        return cls(d=d, ell=[ell0 * ratio ** k for k in range(n + 1)], lam=lam)
