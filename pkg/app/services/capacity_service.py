"""
Capacity Service

Lower-bound functionals for the positive Riesz capacity: the Wolff-energy
functional ||mu||^{3/2} (int W^mu dmu)^{-1/2}, the content form built from a
gauge, and the comparison of the Wolff energy with the Riesz-potential energy
||I_alpha * mu||_3^3 for alpha = 2(d - s)/3, p = 3/2.
"""

import logging
import math
from typing import Tuple

import numpy as np
from scipy import integrate

from app.config import QUAD_TOL, WOLFF_GAUSS_ORDER
from app.exceptions import ConfigError, DivergentIntegralError
from app.models.capacity_schema import CapacityFunctionalReport
from app.services.gauge_service import GaugeFunction, PowerGauge, finiteness_test
from app.services.measure_service import CubeMeasure, DiscreteMeasure
from app.services.operator_service import wolff_energy
from app.services.riesz_service import RieszContext

logger = logging.getLogger(__name__)

CAPACITY_P = 1.5
ATOMIC_NOTE = "atomic: use cube-smoothed surrogate"
# beyond this multiple of the support diameter I_alpha * mu is replaced by its far-field power law
FAR_FIELD_FACTOR = 1e3


def riesz_alpha(ctx: RieszContext) -> float:
    """alpha with d - alpha p = s for p = 3/2."""
    return 2.0 * (ctx.d - ctx.s) / 3.0


def _zero_report(mu) -> CapacityFunctionalReport:
    return CapacityFunctionalReport(measure_id=mu.measure_id, norm_mu=0.0, energy=0.0, functional=0.0)


def _functional(norm: float, energy: float) -> float:
    if not 0 < energy < math.inf:
        return 0.0
    return norm ** 1.5 / math.sqrt(energy)


def gamma_functional_from_measure(mu, ctx: RieszContext, quad_tol: float = QUAD_TOL) -> CapacityFunctionalReport:
    """
    ||mu||^{3/2} [int W^mu dmu]^{-1/2} for a nonnegative measure.

    Purely atomic measures have infinite energy; the functional is then 0 and
    the report says to use a cube-smoothed surrogate.
    """
    ctx.require_subcritical()
    if not mu.is_nonnegative:
        raise ConfigError("capacity functionals need a nonnegative measure")
    norm = mu.total_variation
    if norm == 0:
        return _zero_report(mu)
    if isinstance(mu, DiscreteMeasure):
        logger.warning("gamma functional of %s: atoms give infinite Wolff energy", mu.measure_id)
        return CapacityFunctionalReport(
            measure_id=mu.measure_id, norm_mu=norm, energy=math.inf, functional=0.0, notes=ATOMIC_NOTE
        )
    order = WOLFF_GAUSS_ORDER if quad_tol >= 1e-9 else 2 * WOLFF_GAUSS_ORDER
    energy = wolff_energy(mu, ctx.s, order)
    return CapacityFunctionalReport(
        measure_id=mu.measure_id, norm_mu=norm, energy=energy, functional=_functional(norm, energy)
    )


def gamma_functional_from_content(h: GaugeFunction, ctx: RieszContext, Mh: float, tol: float = QUAD_TOL) -> float:
    """
    Mh [int_0^{t2} (h(t)/t^s)^2 dt/t]^{-1/2} with h(t2) = Mh.

    For h = t^beta this is sqrt(2 (beta - s)) Mh^{s/beta}.
    """
    if not Mh > 0:
        raise ConfigError(f"content Mh must be positive, got {Mh}")
    ctx.require_subcritical()
    if isinstance(h, PowerGauge):
        if h.beta <= ctx.s:
            raise DivergentIntegralError(f"gauge integral diverges at 0 for beta={h.beta} <= s={ctx.s}")
        return math.sqrt(2.0 * (h.beta - ctx.s)) * Mh ** (ctx.s / h.beta)
    t2 = float(h.inverse(Mh))
    report = finiteness_test(h, ctx.s, t2, tol)
    if not report.finite:
        raise DivergentIntegralError(f"gauge integral of {h!r} diverges at 0 for s={ctx.s}")
    return Mh / math.sqrt(report.value)


def _interval_kernel(u: np.ndarray, alpha: float) -> np.ndarray:
    """Antiderivative of |u|^{alpha - 1}."""
    return np.sign(u) * np.abs(u) ** alpha / alpha


def riesz_potential(mu: CubeMeasure, alpha: float, x) -> np.ndarray:
    """I_alpha * mu(x) = int |x - y|^{alpha - d} dmu(y) for d = 1, exact per interval."""
    if mu.d != 1:
        raise ConfigError("the Riesz potential is evaluated for interval measures (d = 1)")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a = mu.corners[:, 0][None, :] - x[:, None]
    b = a + mu.side
    density = mu.masses / mu.side
    return ((_interval_kernel(b, alpha) - _interval_kernel(a, alpha)) * density[None, :]).sum(axis=1)


def _support_box(mu: CubeMeasure) -> Tuple[float, float]:
    lo, hi = mu.bounding_box()
    return float(lo[0]), float(hi[0])


def riesz_potential_norm(mu, ctx: RieszContext, quad_tol: float = QUAD_TOL) -> float:
    """
    ||I_alpha * mu||_3^3 with A_{d,alpha} = 1.

    Piecewise quadrature on the support inflated four times (split at the
    interval endpoints), then on the annulus out to FAR_FIELD_FACTOR diameters,
    then the closed-form tail of ||mu||^3 |x - c|^{-1-2s}.
    """
    if isinstance(mu, DiscreteMeasure):
        return math.inf if mu.size else 0.0
    if mu.total_variation == 0:
        return 0.0
    if mu.d != 1:
        raise ConfigError("||I_alpha * mu||_3 is computed for interval measures (d = 1)")
    alpha = riesz_alpha(ctx)
    lo, hi = _support_box(mu)
    width = hi - lo
    center = 0.5 * (lo + hi)

    def cube(x):
        return float(riesz_potential(mu, alpha, x)[0]) ** 3

    edges = np.unique(np.concatenate([mu.corners[:, 0], mu.corners[:, 0] + mu.side]))
    box = np.concatenate([[center - 2 * width], edges, [center + 2 * width]])
    total = 0.0
    for a, b in zip(box[:-1], box[1:]):
        if b > a:
            total += integrate.quad(cube, a, b, epsabs=0.0, epsrel=quad_tol, limit=200)[0]
    far = FAR_FIELD_FACTOR * width
    for side in (-1.0, 1.0):
        total += integrate.quad(
            lambda u: cube(center + side * math.exp(u)) * math.exp(u),
            math.log(2 * width),
            math.log(far),
            epsabs=0.0,
            epsrel=quad_tol,
            limit=200,
        )[0]
    # both sides: 2 ||mu||^3 int_far^inf r^{-1-2s} dr
    total += mu.total_variation ** 3 * far ** (-2.0 * ctx.s) / ctx.s
    return total


def nonlinear_capacity_functional(mu, ctx: RieszContext, quad_tol: float = QUAD_TOL) -> float:
    """||mu||^p / ||I_alpha * mu||_{p'}^p with p = 3/2, p' = 3."""
    riesz = riesz_potential_norm(mu, ctx, quad_tol)
    return _functional(mu.total_variation, riesz)


def riesz_energy_comparison(mu, ctx: RieszContext, quad_tol: float = QUAD_TOL) -> CapacityFunctionalReport:
    """
    Wolff energy against ||I_alpha * mu||_3^3 and the two capacity functionals.

    The two energies are comparable up to constants depending on s and d; the
    ratio is invariant under dilation and mass scaling of mu.
    """
    ctx.require_subcritical()
    if mu.total_variation == 0:
        report = _zero_report(mu)
        return report.model_copy(update={"riesz_energy": 0.0, "energy_ratio": 0.0, "nonlinear_functional": 0.0})
    if isinstance(mu, DiscreteMeasure):
        raise ConfigError(f"riesz_energy_comparison needs a non-atomic measure; {ATOMIC_NOTE}")
    base = gamma_functional_from_measure(mu, ctx, quad_tol)
    riesz = riesz_potential_norm(mu, ctx, quad_tol)
    ratio = base.energy / riesz if riesz > 0 else math.inf
    logger.info(
        "energy comparison %s: wolff=%.6g riesz=%.6g ratio=%.6g", mu.measure_id, base.energy, riesz, ratio
    )
    return base.model_copy(
        update={
            "riesz_energy": riesz,
            "energy_ratio": ratio,
            "nonlinear_functional": _functional(base.norm_mu, riesz),
        }
    )
