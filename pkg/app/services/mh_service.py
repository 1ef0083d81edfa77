"""
Critical-Size Service

Solves kappa^2 * int_{1/N}^1 [t / h^{-1}(M t)^s]^2 dt/t = 1 for M, the content
scale of the Cartan-type estimate, together with the closed form for power
gauges, the doubling ratio and the sandwich variant built on the truncation
thresholds.
"""

import logging
import math
from typing import Callable, Tuple

import numpy as np
from scipy import integrate, optimize

from app.config import MH_BRACKET_BITS, MH_TOL, QUAD_TOL
from app.exceptions import ConfigError, DivergentIntegralError, RootBracketError
from app.models.mh_schema import MhQuery
from app.services.gauge_service import GaugeFunction, PowerGauge, finiteness_test, log_quad

logger = logging.getLogger(__name__)


def _power_factor(a: float, N: float) -> float:
    """(1 - N^{-a}) / a, continuous through a = 0 and with N = inf for a > 0."""
    if math.isinf(N):
        return 1.0 / a
    log_n = math.log(N)
    if abs(a * log_n) < 1e-12:
        return log_n
    return -math.expm1(-a * log_n) / a


def power_gauge_mh(beta: float, s: float, kappa: float, N: float) -> float:
    """
    Exact M for h(t) = t^beta.

    Args:
        beta: Gauge exponent, 0 < beta <= d
        s: Riesz exponent
        kappa: Ratio ||nu|| / P
        N: Number of atoms (real, >= 2) or math.inf

    Returns:
        M = [kappa^2 (1 - N^{-a}) / a]^{beta/(2s)} with a = 2 - 2s/beta
    """
    if not (beta > 0 and s > 0 and kappa > 0):
        raise ConfigError(f"power_gauge_mh needs beta, s, kappa > 0 (got {beta}, {s}, {kappa})")
    if not N >= 2:
        raise ConfigError(f"N must be >= 2, got {N}")
    a = 2.0 - 2.0 * s / beta
    if math.isinf(N) and a <= 0:
        raise DivergentIntegralError(f"N = inf needs beta > s, got beta={beta}, s={s}")
    return (kappa ** 2 * _power_factor(a, N)) ** (beta / (2.0 * s))


def _initial_guess(h: GaugeFunction, s: float, kappa: float, N: float) -> float:
    """Power-law estimate from the local log-log slope of h at 1."""
    beta = math.log(h(2.0) / h(1.0)) / math.log(2.0)
    beta = min(max(beta, 1e-3), float(h.d))
    if math.isinf(N) and beta <= s:
        beta = float(h.d)
    try:
        return power_gauge_mh(beta, s, kappa, N)
    except (ConfigError, DivergentIntegralError, OverflowError):
        return 1.0


def _solve_decreasing(F: Callable[[float], float], M0: float, tol: float, label: str) -> float:
    """Root of F(M) = 1 for F strictly decreasing, bracketed in M0 * 2^{+-bits} and solved in log M."""
    lo = hi = M0
    f_lo = f_hi = F(M0)
    for _ in range(MH_BRACKET_BITS):
        if f_hi <= 1.0:
            break
        hi *= 2.0
        f_hi = F(hi)
    for _ in range(MH_BRACKET_BITS):
        if f_lo >= 1.0:
            break
        lo *= 0.5
        f_lo = F(lo)
    if not (f_lo >= 1.0 >= f_hi):
        raise RootBracketError(
            f"{label}: F(M)=1 not bracketed in [{M0:g}*2^-{MH_BRACKET_BITS}, {M0:g}*2^{MH_BRACKET_BITS}] "
            f"(F(lo)={f_lo:g}, F(hi)={f_hi:g}); check the gauge inverse"
        )
    if f_lo == 1.0:
        return lo
    if f_hi == 1.0:
        return hi
    logger.debug("%s: bracket [%g, %g]", label, lo, hi)
    log_m = optimize.brentq(
        lambda x: F(math.exp(x)) - 1.0,
        math.log(lo),
        math.log(hi),
        xtol=max(tol * 0.1, 1e-15),
        rtol=1e-15,
        maxiter=400,
    )
    return math.exp(log_m)


def mh_integral(h: GaugeFunction, s: float, M: float, N: float, tol: float = QUAD_TOL) -> float:
    """int_{1/N}^1 [t / h^{-1}(M t)^s]^2 dt/t; the lower limit is 0 for N = inf."""

    def integrand(t):
        return (t / h.inverse(M * t) ** s) ** 2

    kinks = h(h.breakpoints()) / M if h.breakpoints().size else np.empty(0)
    if not math.isinf(N):
        return log_quad(integrand, 1.0 / N, 1.0, tol, kinks)
    # below every kink the integrand is a pure power of t
    t_low = min(float(kinks.min()) if kinks.size else 1.0, 1.0) * 1e-3
    head = log_quad(integrand, t_low, 1.0, tol, kinks)
    tail, _ = integrate.quad(
        lambda u: float(integrand(math.exp(u))), -np.inf, math.log(t_low), epsabs=0.0, epsrel=tol, limit=400
    )
    return head + tail


def mh_function(q: MhQuery, M: float, tol: float = QUAD_TOL) -> float:
    """F(M) = kappa^2 * mh_integral; strictly decreasing in M."""
    return q.kappa ** 2 * mh_integral(q.h, q.s, M, q.N, tol)


def _check_query(q: MhQuery) -> None:
    if not q.s < q.h.d:
        raise ConfigError(f"s must lie in (0, d={q.h.d}), got {q.s}")
    if q.is_infinite:
        report = finiteness_test(q.h, q.s, 1.0)
        if not report.finite:
            raise DivergentIntegralError(
                f"N = inf requires a finite gauge integral at 0 for s={q.s}; {q.h!r} diverges"
            )


def solve_mh(q: MhQuery, tol: float = MH_TOL) -> float:
    """
    Unique M > 0 with F(M) = 1.

    Args:
        q: Gauge, exponent, kappa and N
        tol: Relative tolerance in (0, 1e-3]

    Returns:
        M, verified to sit where F is strictly decreasing
    """
    M, _ = solve_mh_with_residual(q, tol)
    return M


def solve_mh_with_residual(q: MhQuery, tol: float = MH_TOL) -> Tuple[float, float]:
    if not 0 < tol <= 1e-3:
        raise ConfigError(f"tolerance must lie in (0, 1e-3], got {tol}")
    _check_query(q)
    quad_tol = min(QUAD_TOL, max(tol, 1e-13))
    M0 = _initial_guess(q.h, q.s, q.kappa, q.N)
    M = _solve_decreasing(lambda m: mh_function(q, m, quad_tol), M0, tol, "solve_mh")
    value = mh_function(q, M, quad_tol)
    above, below = mh_function(q, M * (1 + 1e-3), quad_tol), mh_function(q, M * (1 - 1e-3), quad_tol)
    if not above < value < below:
        raise RootBracketError(f"solve_mh: F is not decreasing at M={M:g}")
    return M, abs(value - 1.0)


def mh(h: GaugeFunction, s: float, kappa: float, N: float = math.inf, tol: float = MH_TOL) -> float:
    """Shortcut: closed form for power gauges, the solver otherwise."""
    if isinstance(h, PowerGauge):
        if not 0 < s < h.d:
            raise ConfigError(f"s must lie in (0, d={h.d}), got {s}")
        return power_gauge_mh(h.beta, s, kappa, N)
    return solve_mh(MhQuery(h=h, s=s, kappa=kappa, N=N), tol)


def doubling_ratio(h: GaugeFunction, s: float, kappa: float, N: float, tol: float = MH_TOL) -> float:
    """M(2 kappa, 2N) / M(kappa, N); bounded by a constant depending on s and d."""
    if not N >= 2:
        raise ConfigError(f"N must be >= 2, got {N}")
    upper = solve_mh(MhQuery(h=h, s=s, kappa=2 * kappa, N=2 * N), tol)
    lower = solve_mh(MhQuery(h=h, s=s, kappa=kappa, N=N), tol)
    return upper / lower


def sandwich_mh(
    h: GaugeFunction, s: float, kappa: float, N: float, c: float = 1.0, tol: float = MH_TOL
) -> float:
    """
    M with M = kappa * [int_{h^{-1}(cM/N)}^{h^{-1}(M)} (h(y)/y^s)^2 dy/y]^{1/2}.

    The interval runs between the truncation thresholds; the result stays
    within a multiplicative band of ``solve_mh``.
    """
    if not 0 < c < N:
        raise ConfigError(f"sandwich constant must satisfy 0 < c < N, got c={c}, N={N}")
    if not 0 < s < h.d:
        raise ConfigError(f"s must lie in (0, d={h.d}), got {s}")
    kinks = h.breakpoints()

    def F(M):
        lo, hi = float(h.inverse(c * M / N)), float(h.inverse(M))
        value = log_quad(lambda y: (h(y) / y ** s) ** 2, lo, hi, QUAD_TOL, kinks)
        return kappa ** 2 * value / M ** 2

    return _solve_decreasing(F, _initial_guess(h, s, kappa, N), tol, "sandwich_mh")
