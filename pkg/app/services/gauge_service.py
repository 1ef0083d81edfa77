"""
Gauge Service

Measuring functions h (power laws, log-log tables, regularized and truncated
gauges), their inverses, the invariant checker and the small-scale finiteness
test for the integral of (h(t)/t^s)^2 dt/t.
"""

import logging
import math
from typing import Callable, Dict, Optional, Sequence

import numpy as np
from scipy import integrate

from app.config import FINITENESS_DECADES, GAUGE_GRID_PER_DECADE, GAUGE_TOL, QUAD_TOL
from app.exceptions import ConfigError, GaugeError
from app.models.gauge_schema import FinitenessReport, GaugeSpec

logger = logging.getLogger(__name__)


def _as_output(values: np.ndarray, scalar: bool):
    return float(values) if scalar else values


class GaugeFunction:
    """
    A measuring function h on [0, inf) in dimension d.

    Subclasses provide ``_eval`` and ``_inverse`` on positive arrays; the base
    class handles scalars, h(0) = 0 and exposes the ratio h(t)/t^d.
    """

    kind = "composite"

    def __init__(self, d: int, label: str = "", metadata: Optional[Dict] = None):
        if d < 1:
            raise GaugeError(f"dimension must be a positive integer, got {d}")
        self.d = int(d)
        self.label = label
        self.metadata = dict(metadata or {})

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        positive = t > 0
        if np.any(positive):
            out[positive] = self._eval(t[positive])
        return _as_output(out, scalar)

    def inverse(self, u):
        scalar = np.ndim(u) == 0
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        positive = u > 0
        if np.any(positive):
            out[positive] = self._inverse(u[positive])
        return _as_output(out, scalar)

    def ratio(self, t):
        """h(t)/t^d, non-increasing for an admissible gauge."""
        t = np.asarray(t, dtype=float)
        return self(t) / t ** self.d

    def breakpoints(self) -> np.ndarray:
        """Kinks of h (empty for smooth gauges); used to split quadratures."""
        return np.empty(0)

    def _eval(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _inverse(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label or self.kind}, d={self.d})"


class PowerGauge(GaugeFunction):
    """h(t) = t^beta with 0 < beta <= d."""

    kind = "power"

    def __init__(self, beta: float, d: int):
        if not 0 < beta <= d + GAUGE_TOL:
            raise GaugeError(f"power gauge needs 0 < beta <= d, got beta={beta}, d={d}")
        super().__init__(d, label=f"power:{beta:g}")
        self.beta = float(beta)

    def _eval(self, t):
        return t ** self.beta

    def _inverse(self, u):
        return u ** (1.0 / self.beta)


class TableGauge(GaugeFunction):
    """
    Monotone table interpolated piecewise-linearly in log-log coordinates.

    Outside the table the end slopes (or the explicit ``low_slope`` /
    ``high_slope``) continue the power law, so h(0) = 0 and h(inf) = inf.
    """

    kind = "table"

    def __init__(
        self,
        t_points: Sequence[float],
        h_points: Sequence[float],
        d: int,
        low_slope: Optional[float] = None,
        high_slope: Optional[float] = None,
        kind: str = "table",
        label: str = "",
        metadata: Optional[Dict] = None,
    ):
        super().__init__(d, label=label or f"{kind}:{len(t_points)}pts", metadata=metadata)
        t = np.asarray(t_points, dtype=float)
        h = np.asarray(h_points, dtype=float)
        if t.ndim != 1 or t.shape != h.shape or t.size < 2:
            raise GaugeError("table gauge needs two equally long lists with at least two points")
        if np.any(t <= 0) or np.any(h <= 0):
            raise GaugeError("table gauge points must be positive (h(0)=0 is implied)")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(h) <= 0):
            raise GaugeError("table gauge must be strictly increasing in t and in h")
        self.kind = kind
        self._lt = np.log(t)
        self._lh = np.log(h)
        slopes = np.diff(self._lh) / np.diff(self._lt)
        self._low = float(slopes[0] if low_slope is None else low_slope)
        self._high = float(slopes[-1] if high_slope is None else high_slope)
        all_slopes = np.concatenate([slopes, [self._low, self._high]])
        if np.any(all_slopes <= 0) or np.any(all_slopes > d * (1 + 1e-9) + GAUGE_TOL):
            raise GaugeError(f"log-log slopes of a gauge must lie in (0, d={d}]; h(t)/t^d would increase")
        for arr in (self._lt, self._lh):
            arr.flags.writeable = False

    @staticmethod
    def _loglog(x, xs, ys, low, high):
        lx = np.log(x)
        y = np.interp(lx, xs, ys)
        y = np.where(lx < xs[0], ys[0] + low * (lx - xs[0]), y)
        y = np.where(lx > xs[-1], ys[-1] + high * (lx - xs[-1]), y)
        return np.exp(y)

    def _eval(self, t):
        return self._loglog(t, self._lt, self._lh, self._low, self._high)

    def _inverse(self, u):
        return self._loglog(u, self._lh, self._lt, 1.0 / self._low, 1.0 / self._high)

    def breakpoints(self):
        return np.exp(self._lt)

    @property
    def grid(self) -> np.ndarray:
        return np.exp(self._lt)


class TruncatedGauge(GaugeFunction):
    """h_bar(t) = t^d h(t1)/t1^d below t1 and h(t) from t1 on."""

    kind = "composite"

    def __init__(self, base: GaugeFunction, t1: float):
        if not t1 > 0:
            raise GaugeError(f"truncation point t1 must be positive, got {t1}")
        super().__init__(base.d, label=f"trunc({base.label},{t1:g})")
        self.base = base
        self.t1 = float(t1)
        self._h1 = float(base(self.t1))

    def _eval(self, t):
        below = t < self.t1
        out = np.empty_like(t)
        out[below] = t[below] ** self.d * self._h1 / self.t1 ** self.d
        if np.any(~below):
            out[~below] = self.base(t[~below])
        return out

    def _inverse(self, u):
        below = u < self._h1
        out = np.empty_like(u)
        out[below] = self.t1 * (u[below] / self._h1) ** (1.0 / self.d)
        if np.any(~below):
            out[~below] = self.base.inverse(u[~below])
        return out

    def breakpoints(self):
        return np.concatenate([[self.t1], self.base.breakpoints()])


def gauge_from_spec(spec: GaugeSpec, d: int) -> GaugeFunction:
    """Build a gauge from its config-file description; d comes from the experiment."""
    if spec.kind == "power":
        return PowerGauge(spec.beta, d)
    t, h = zip(*spec.points)
    return TableGauge(t, h, d)


def log_grid(lo: float, hi: float, per_decade: int = 64) -> np.ndarray:
    decades = max(math.log10(hi / lo), 1e-12)
    return np.geomspace(lo, hi, int(math.ceil(decades * per_decade)) + 1)


def validate_gauge(h: GaugeFunction, grid: Optional[np.ndarray] = None, tol: float = GAUGE_TOL) -> None:
    """Check the measuring-function invariants on a grid; raise GaugeError on the first failure."""
    if grid is None:
        grid = log_grid(1e-6, 1e6, 16)
    grid = np.asarray(grid, dtype=float)
    if h(0.0) != 0.0:
        raise GaugeError(f"{h!r}: h(0) must be 0")
    values = h(grid)
    if np.any(np.diff(values) <= 0):
        raise GaugeError(f"{h!r}: h is not strictly increasing on the grid")
    ratio = values / grid ** h.d
    scale = np.maximum(ratio[1:], 1.0)
    if np.any(ratio[:-1] < ratio[1:] - tol * scale):
        raise GaugeError(f"{h!r}: h(t)/t^d increases somewhere on the grid")
    back = h(h.inverse(values))
    if np.any(np.abs(back - values) > 1e-9 * np.maximum(values, 1.0)):
        raise GaugeError(f"{h!r}: inverse is inconsistent with h")
    if np.any(h(2 * grid) > 2 ** h.d * values * (1 + 1e-9) + tol):
        raise GaugeError(f"{h!r}: doubling bound h(2t) <= 2^d h(t) fails")


def regularize_gauge(
    h_raw: Callable,
    d: int,
    t_min: float,
    r_max: float,
    per_decade: int = GAUGE_GRID_PER_DECADE,
) -> TableGauge:
    """
    h_tilde(r) = r^d inf_{t_min <= t <= r} h_raw(t)/t^d, tabulated on a log grid.

    Below t_min the floor ratio h_raw(t_min)/t_min^d is used; beyond r_max the
    last ratio is kept. ``metadata['floor_binding']`` records whether the ratio
    still decreased towards t_min, i.e. whether the floor changed the result.
    """
    if not t_min > 0:
        raise GaugeError(f"t_min must be positive, got {t_min}")
    if not r_max > t_min:
        raise GaugeError(f"r_max must exceed t_min, got {r_max} <= {t_min}")
    grid = log_grid(t_min, r_max, per_decade)
    values = np.asarray(_call_vectorized(h_raw, grid), dtype=float)
    zero = float(np.asarray(_call_vectorized(h_raw, np.array([0.0])))[0])
    if zero != 0.0:
        raise GaugeError(f"raw gauge must vanish at 0, got h(0)={zero}")
    if np.any(np.diff(values) <= 0) or np.any(values <= 0):
        raise GaugeError("raw gauge is not strictly increasing on the sample grid")
    ratio = values / grid ** d
    running = np.minimum.accumulate(ratio)
    floor_binding = bool(ratio[1] > ratio[0])
    if floor_binding:
        logger.warning("regularize_gauge: h(t)/t^d still decreasing at t_min=%g; floor applied", t_min)
    return TableGauge(
        grid,
        grid ** d * running,
        d,
        low_slope=float(d),
        high_slope=float(d),
        kind="composite",
        label=f"regularized(t_min={t_min:g})",
        metadata={"t_min": t_min, "r_max": r_max, "floor_binding": floor_binding},
    )


def _call_vectorized(fn: Callable, grid: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(fn(grid), dtype=float)
        if out.shape == grid.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(fn(float(t))) for t in grid])


def truncate_gauge(h: GaugeFunction, t1: float) -> TruncatedGauge:
    return TruncatedGauge(h, t1)


def log_quad(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = QUAD_TOL,
    breakpoints: Optional[np.ndarray] = None,
) -> float:
    """Integrate f(t) dt/t over [a, b] as an integral in u = log t."""
    if b <= a:
        return 0.0
    lo, hi = math.log(a), math.log(b)
    points = None
    if breakpoints is not None and len(breakpoints):
        inner = np.log(breakpoints[(breakpoints > a) & (breakpoints < b)])
        if inner.size:
            points = inner[:: max(1, inner.size // 40)]
    value, _ = integrate.quad(
        lambda u: float(f(math.exp(u))), lo, hi, epsabs=0.0, epsrel=tol, limit=400, points=points
    )
    return value


def gauge_integral(h: GaugeFunction, s: float, lower: float, upper: float, tol: float = QUAD_TOL) -> float:
    """Integral of (h(t)/t^s)^2 dt/t over [lower, upper], lower >= 0."""
    if lower <= 0:
        report = finiteness_test(h, s, upper, tol)
        return report.value
    kinks = h.breakpoints()
    return log_quad(lambda t: (h(t) / t ** s) ** 2, lower, upper, tol, kinks)


def finiteness_test(h: GaugeFunction, s: float, upper: float, tol: float = QUAD_TOL) -> FinitenessReport:
    """
    Decide whether the integral of (h(t)/t^s)^2 dt/t converges at 0.

    Integrates decade by decade towards 0; geometric decay of the decade
    increments means convergence, with the remaining tail summed in closed form.
    """
    if not 0 < s < h.d:
        raise ConfigError(f"finiteness test needs 0 < s < d, got s={s}, d={h.d}")
    if not upper > 0:
        raise ConfigError(f"upper limit must be positive, got {upper}")
    kinks = h.breakpoints()

    def integrand(t):
        return (h(t) / t ** s) ** 2

    total = 0.0
    increments = []
    ratio = math.inf
    for k in range(FINITENESS_DECADES):
        b = upper * 10.0 ** (-k)
        inc = log_quad(integrand, b / 10.0, b, tol * 0.1, kinks)
        increments.append(inc)
        total += inc
        if not math.isfinite(total) or total > 1e300:
            break
        if k >= 2:
            prev = increments[-2]
            ratio = inc / prev if prev > 0 else 0.0
            earlier = increments[-2] / increments[-3] if increments[-3] > 0 else 0.0
            if ratio < 1 - 1e-6 and earlier < 1 - 1e-6:
                tail = inc * ratio / (1 - ratio)
                if tail <= tol * (total + tail):
                    return FinitenessReport(finite=True, value=total + tail, decades=k + 1, decay_ratio=ratio)
    if ratio < 1 - 1e-6 and math.isfinite(total):
        tail = increments[-1] * ratio / (1 - ratio)
        logger.info("finiteness_test: slow geometric decay (ratio %.6f), tail extrapolated", ratio)
        return FinitenessReport(finite=True, value=total + tail, decades=len(increments), decay_ratio=ratio)
    return FinitenessReport(finite=False, value=math.inf, decades=len(increments), decay_ratio=ratio)
