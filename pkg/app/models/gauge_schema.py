"""
Gauge Schemas

Pydantic models for measuring-function specifications and finiteness reports.
"""

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, model_validator


class GaugeSpec(BaseModel):
    """Gauge as written in config files: power law or monotone table."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["power", "table"]
    beta: Optional[float] = None
    points: Optional[List[Tuple[float, float]]] = None

    @model_validator(mode="after")
    def _check_fields(self) -> "GaugeSpec":
        if self.kind == "power":
            if self.beta is None or self.beta <= 0:
                raise ValueError("power gauge needs a positive 'beta'")
        elif not self.points or len(self.points) < 2:
            raise ValueError("table gauge needs at least two 'points'")
        return self

    @classmethod
    def parse(cls, text: str) -> "GaugeSpec":
        """Parse the short command-line form ``power:<beta>``."""
        kind, _, value = text.partition(":")
        if kind != "power" or not value:
            raise ValueError(f"cannot parse gauge '{text}', expected power:<beta>")
        return cls(kind="power", beta=float(value))

    @property
    def gauge_id(self) -> str:
        if self.kind == "power":
            return f"power:{self.beta:g}"
        return f"table:{len(self.points)}pts"


class FinitenessReport(BaseModel):
    """Outcome of the small-scale square-integrability test of h(t)/t^s."""
    finite: bool
    value: float
    decades: int
    decay_ratio: float
