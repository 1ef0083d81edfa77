"""
Capacity Schemas

Lower-bound capacity functionals reported per measure.
"""

from typing import Optional

from pydantic import BaseModel


class CapacityFunctionalReport(BaseModel):
    """
    Wolff-energy functional ||mu||^{3/2} energy^{-1/2} and, when computed,
    the Riesz-potential energy ||I_alpha * mu||_3^3 with its capacity functional.
    """
    measure_id: str
    norm_mu: float
    energy: float
    functional: float
    riesz_energy: Optional[float] = None
    energy_ratio: Optional[float] = None
    nonlinear_functional: Optional[float] = None
    notes: str = "lower bound modulo c(s,d)"
