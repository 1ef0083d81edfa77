"""
Operator Service

The eps-truncated Riesz operator of a nonnegative atomic measure as a finite
matrix, its L2(mu) -> L2(mu; R^d) norm by power iteration, the sup over the
eps breakpoints, and Wolff potentials W^mu(x) = int_0^inf [mu(B(x,r))/r^s]^2 dr/r
computed piece by piece between ball-mass breakpoints.
"""

import logging
import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from app.config import (
    DENSE_SVD_MAX_N,
    MAX_EPS_BREAKPOINTS,
    POWER_ITER_FACTOR,
    POWER_ITER_MIN,
    QUAD_TOL,
    SUPPORT_SAMPLE_MAX,
    WOLFF_GAUSS_ORDER,
    WOLFF_MAX_PIECES,
)
from app.exceptions import ConfigError, ConvergenceError
from app.models.operator_schema import OperatorNormReport, WeakTypeReport, WolffReport
from app.services.measure_service import CubeMeasure, DiscreteMeasure
from app.services.riesz_service import RieszContext, maximal_transform_many

logger = logging.getLogger(__name__)


class RieszOperatorMatrix:
    """
    Component matrices entry(i, j) = K^s(x_j - x_i) for |x_j - x_i| > eps, zero otherwise.

    Acting on f in L2(mu): (Af)(x_i) = sum_j entry(i, j) f_j mu_j.
    """

    def __init__(self, points: np.ndarray, weights: np.ndarray, ctx: RieszContext, eps: float, entries: np.ndarray):
        self.points = points
        self.weights = weights
        self.ctx = ctx
        self.eps = eps
        self.entries = entries
        root = np.sqrt(weights)
        # stacked D^{1/2} K_c D^{1/2}; its spectral norm is the weighted operator norm
        self.B = (root[None, :, None] * entries * root[None, None, :]).reshape(-1, weights.size)

    @property
    def size(self) -> int:
        return self.weights.size

    def apply(self, f: np.ndarray) -> np.ndarray:
        """(Af) as a (d, N) array."""
        return self.entries @ (np.asarray(f, dtype=float) * self.weights)

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """<f, g> in L2(mu), summed over components for vector fields."""
        return float(np.sum(f * g * self.weights))


def _atoms_of(mu) -> DiscreteMeasure:
    if isinstance(mu, CubeMeasure):
        return mu.atom_surrogate()
    if isinstance(mu, DiscreteMeasure):
        return mu
    raise ConfigError(f"unsupported measure type {type(mu).__name__}")


def _entries(points: np.ndarray, ctx: RieszContext, eps: float) -> np.ndarray:
    diff = points[None, :, :] - points[:, None, :]
    dist = np.linalg.norm(diff, axis=2)
    mask = dist > eps
    safe = np.where(mask, dist, 1.0)
    return np.moveaxis(np.where(mask[:, :, None], diff / safe[:, :, None] ** (ctx.s + 1), 0.0), 2, 0)


def assemble_operator(mu, ctx: RieszContext, eps: float) -> RieszOperatorMatrix:
    """
    Build the eps-masked operator matrix of a nonnegative measure.

    Cube measures are replaced by their atom surrogate (one atom per cube center).
    """
    if not eps > 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    atoms = _atoms_of(mu)
    if atoms.d != ctx.d:
        raise ConfigError(f"measure dimension {atoms.d} differs from context dimension {ctx.d}")
    if atoms.size and not atoms.is_nonnegative:
        raise ConfigError("operator norms are defined for nonnegative measures; got signed weights")
    points = np.asarray(atoms.points)
    weights = np.asarray(atoms.weights)
    return RieszOperatorMatrix(points, weights, ctx, eps, _entries(points, ctx, eps))


def dense_norm(A: RieszOperatorMatrix) -> float:
    """Spectral norm by dense SVD; the oracle for small matrices."""
    if A.size == 0 or not np.any(A.B):
        return 0.0
    return float(np.linalg.norm(A.B, 2))


def _start_vector(n: int, variant: int) -> np.ndarray:
    k = np.arange(n)
    if variant == 0:
        v = np.ones(n) + 1e-2 * np.cos(0.61803398875 * 2 * np.pi * k)
    else:
        v = np.where(k % 2 == 0, 1.0, -1.0) + 1e-2 * np.sin(1.41421356237 * k)
    return v / np.linalg.norm(v)


def _power_iterate(B: np.ndarray, v: np.ndarray, tol: float, cap: int) -> Tuple[float, np.ndarray, int, float, bool]:
    rho_prev = 0.0
    residual = math.inf
    stable = 0
    for it in range(1, cap + 1):
        w = B.T @ (B @ v)
        rho = float(v @ w)
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0, v, it, 0.0, True
        residual = float(np.linalg.norm(w - rho * v)) / max(rho, 1e-300)
        v = w / norm_w
        if abs(rho - rho_prev) <= 0.01 * tol * rho and residual <= math.sqrt(tol):
            stable += 1
            if stable >= 3:
                return rho, v, it, residual, True
        else:
            stable = 0
        rho_prev = rho
    return rho_prev, v, cap, residual, False


def power_norm(
    A: RieszOperatorMatrix, tol: float = 1e-10, start: Optional[np.ndarray] = None
) -> Tuple[OperatorNormReport, np.ndarray]:
    """
    Operator norm by power iteration on the weighted normal operator.

    Returns the report and the final iterate, usable as a warm start.
    """
    n = A.size
    if n == 0 or not np.any(A.B):
        return OperatorNormReport(norm=0.0, eps=A.eps, method="zero"), np.zeros(n)
    cap = max(POWER_ITER_FACTOR * n, POWER_ITER_MIN)
    starts = [start] if start is not None else []
    starts += [_start_vector(n, 0), _start_vector(n, 1)]
    residual = math.inf
    total = 0
    for attempt, v in enumerate(starts[:3]):
        rho, v, its, residual, ok = _power_iterate(A.B, v / np.linalg.norm(v), tol, cap)
        total += its
        if ok:
            return (
                OperatorNormReport(norm=math.sqrt(max(rho, 0.0)), eps=A.eps, iterations=total, residual=residual),
                v,
            )
        logger.info("power iteration restart %d after %d iterations (residual %.3e)", attempt + 1, its, residual)
    if n <= DENSE_SVD_MAX_N:
        logger.info("power iteration did not converge for N=%d; dense SVD fallback", n)
        return OperatorNormReport(norm=dense_norm(A), eps=A.eps, method="svd", iterations=total), starts[-1]
    raise ConvergenceError(f"power iteration did not converge for N={n} after {total} iterations", residual)


def operator_norm(A: RieszOperatorMatrix, tol: float = 1e-10) -> float:
    """||A|| from L2(mu) to L2(mu; R^d), relative tolerance ``tol``."""
    report, _ = power_norm(A, tol)
    return report.norm


def eps_breakpoints(mu) -> np.ndarray:
    """
    eps values giving every distinct truncated matrix.

    One eps below the smallest pairwise distance, then each distinct distance
    except the largest.
    """
    atoms = _atoms_of(mu)
    if atoms.size < 2:
        return np.array([1.0])
    dist = np.unique(pdist(atoms.points))
    return np.concatenate([[0.5 * dist[0]], dist[:-1]])


def subsample_breakpoints(candidates: np.ndarray, max_points: int) -> np.ndarray:
    """Geometric-index subsample of at most ``max_points`` breakpoints; max_points <= 0 keeps all."""
    if max_points <= 0 or candidates.size <= max_points:
        return candidates
    idx = np.unique(np.round(np.geomspace(1, candidates.size, max_points)).astype(int) - 1)
    return candidates[idx]


def operator_norm_sup(mu, ctx: RieszContext, tol: float = 1e-10, max_points: int = MAX_EPS_BREAKPOINTS) -> OperatorNormReport:
    """
    sup over eps of the truncated operator norm, warm-started from one breakpoint to the next.

    Every breakpoint is evaluated unless ``max_points`` caps the grid; the
    report then carries subsampled=True and both counts.
    """
    candidates = eps_breakpoints(mu)
    grid = subsample_breakpoints(candidates, max_points)
    if grid.size < candidates.size:
        logger.warning("operator_norm_sup: %d of %d eps breakpoints evaluated", grid.size, candidates.size)
    best = OperatorNormReport(norm=0.0, eps=0.0, method="zero")
    start = None
    for eps in grid:
        A = assemble_operator(mu, ctx, float(eps))
        report, start = power_norm(A, tol, start if start is not None and np.any(start) else None)
        if report.norm > best.norm:
            best = report
    logger.debug("operator_norm_sup: %.6g at eps=%.3g", best.norm, best.eps)
    return best.model_copy(
        update={
            "breakpoints": int(grid.size),
            "breakpoints_total": int(candidates.size),
            "subsampled": bool(grid.size < candidates.size),
        }
    )


def cantor_theta_ratio(cantor, ctx: RieszContext, tol: float = 1e-10) -> Dict[str, float]:
    """Squared operator norm of a Cantor measure against sum theta_k^2."""
    norm = operator_norm_sup(cantor, ctx, tol).norm
    theta_sq = float(np.sum(cantor.theta ** 2))
    return {"norm": norm, "theta_sq": theta_sq, "ratio": norm ** 2 / theta_sq}


def _power_integral(e: float, p: float, q: float) -> float:
    """int_p^q r^e dr for 0 <= p < q."""
    if abs(e + 1.0) < 1e-14:
        return math.log(q / p) if p > 0 else math.inf
    if p == 0 and e + 1 <= 0:
        return math.inf
    return (q ** (e + 1) - (p ** (e + 1) if p > 0 else 0.0)) / (e + 1)


def _farthest(mu, x: np.ndarray) -> float:
    if isinstance(mu, CubeMeasure):
        far = np.maximum(np.abs(mu.corners - x), np.abs(mu.corners + mu.side - x))
        return float(np.linalg.norm(far, axis=1).max())
    return float(mu.distances(x).max()) if mu.size else 0.0


def wolff_tail(mu, s: float, x, r: float) -> float:
    """int_R^inf [mu(B(x,t))/t^s]^2 dt/t = ||mu||^2 / (2s R^{2s}) with R = max(r, farthest support distance)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    R = max(r, _farthest(mu, x))
    if R <= 0:
        return math.inf
    return mu.total_variation ** 2 / (2.0 * s * R ** (2.0 * s))


def _wolff_discrete(mu: DiscreteMeasure, s: float, x: np.ndarray, r_min: float) -> float:
    if mu.size == 0:
        return 0.0
    dist = mu.distances(x)
    order = np.argsort(dist)
    dist = dist[order]
    cum = np.cumsum(np.abs(mu.weights[order]))
    if dist[0] == 0 and r_min <= 0:
        return math.inf
    radii, idx = np.unique(dist, return_index=True)
    # mass on (r_i, r_{i+1}] counts every atom with distance <= r_i
    last = np.concatenate([idx[1:], [dist.size]]) - 1
    mass = cum[last]
    total = 0.0
    edges = np.concatenate([radii, [math.inf]])
    for i in range(radii.size):
        lo, hi = max(edges[i], r_min), edges[i + 1]
        if hi <= lo:
            continue
        upper = hi ** (-2 * s) if math.isfinite(hi) else 0.0
        total += mass[i] ** 2 / (2 * s) * (lo ** (-2 * s) - upper)
    return total


def _cube_breakpoints(mu: CubeMeasure, x: np.ndarray) -> np.ndarray:
    lo = mu.corners - x
    hi = lo + mu.side
    if mu.d == 1:
        pts = np.abs(np.concatenate([lo[:, 0], hi[:, 0]]))
    else:
        offsets = np.array(np.meshgrid(*[[0.0, 1.0]] * mu.d, indexing="ij")).reshape(mu.d, -1).T
        corners = lo[:, None, :] + mu.side * offsets[None, :, :]
        near = np.clip(0.0, lo, hi)
        face = np.abs(np.concatenate([lo, hi], axis=1))
        pts = np.concatenate(
            [np.linalg.norm(corners, axis=2).ravel(), np.linalg.norm(near, axis=1), face.ravel()]
        )
    return np.unique(pts[pts >= 0])


def _subsample(values: np.ndarray, limit: int) -> np.ndarray:
    if values.size <= limit:
        return values
    return values[np.unique(np.linspace(0, values.size - 1, limit).round().astype(int))]


def _wolff_cubes(mu: CubeMeasure, s: float, x: np.ndarray, r_min: float, order: int) -> float:
    R = _farthest(mu, x)
    breaks = _cube_breakpoints(mu, x)
    breaks = breaks[(breaks > 0) & (breaks < R)]
    total = 0.0
    if mu.d == 1:
        grid = np.unique(np.concatenate([[0.0, R], breaks]))
        if r_min > 0:
            grid = np.unique(np.concatenate([[r_min], grid[grid > r_min]]))
        values = np.array([mu.ball_mass(x, r) for r in grid])
        for p, q, mp, mq in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
            b = (mq - mp) / (q - p)
            a = mp - b * p
            if a == 0 and b == 0:
                continue
            for coef, e in ((a * a, -2 * s - 1), (2 * a * b, -2 * s), (b * b, 1 - 2 * s)):
                if coef != 0:
                    total += coef * _power_integral(e, p, q)
        return total + wolff_tail(mu, s, x, max(R, r_min))
    # below the first breakpoint the ball meets a fixed cone: mass = c r^d
    first = float(breaks[0]) if breaks.size else R
    start = max(first, r_min)
    if r_min < first:
        m_first = mu.ball_mass(x, first)
        head = m_first ** 2 / first ** (2 * mu.d) / (2 * mu.d - 2 * s)
        total += head * (first ** (2 * mu.d - 2 * s) - r_min ** (2 * mu.d - 2 * s))
    if R > start:
        pieces = max(WOLFF_MAX_PIECES // 2, 1)
        inner = _subsample(breaks[breaks > start], pieces)
        logs = np.log(np.unique(np.concatenate([[start, R], inner, np.geomspace(start, R, pieces)])))
        nodes, weights = np.polynomial.legendre.leggauss(order)
        for a, b in zip(logs[:-1], logs[1:]):
            u = 0.5 * (b - a) * (nodes + 1.0) + a
            vals = np.array([mu.ball_mass(x, math.exp(t)) for t in u])
            total += 0.5 * (b - a) * float(np.sum(weights * vals ** 2 * np.exp(-2 * s * u)))
    return total + wolff_tail(mu, s, x, max(R, r_min))


def wolff_potential(mu, s: float, x, r_min: float = 0.0, order: int = WOLFF_GAUSS_ORDER) -> float:
    """
    W^mu(x), optionally integrated from ``r_min`` instead of 0.

    Exact for atoms and for cubes in d = 1 (piecewise-linear mass); Gauss-Legendre
    between ball-mass breakpoints for cubes in higher dimension. Atoms at x give inf.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if isinstance(mu, CubeMeasure):
        return _wolff_cubes(mu, s, x, r_min, order)
    return _wolff_discrete(mu, s, x, r_min)


def wolff_energy(mu, s: float, order: int = WOLFF_GAUSS_ORDER) -> float:
    """int W^mu dmu: infinite for atoms, cube Gauss nodes otherwise."""
    if isinstance(mu, CubeMeasure):
        nodes, weights = mu.gauss_nodes()
        return math.fsum(w * wolff_potential(mu, s, p, order=order) for p, w in zip(nodes, weights))
    if mu.size == 0:
        return 0.0
    return math.inf


def support_points(mu, limit: int = SUPPORT_SAMPLE_MAX) -> np.ndarray:
    """Atoms, or cube corners and centers, thinned evenly to at most ``limit`` rows."""
    sample = mu.support_sample()
    if sample.shape[0] <= limit:
        return sample
    return sample[np.unique(np.linspace(0, sample.shape[0] - 1, limit).round().astype(int))]


def wolff_report(
    mu, ctx: RieszContext, queries: Sequence = (), quad_tol: float = QUAD_TOL, max_support: int = SUPPORT_SAMPLE_MAX
) -> WolffReport:
    """
    Wolff potential at the query points, its sup over a support sample and the energy.

    Support samples are all atoms, or cube corners and centers (thinned to
    ``max_support``); the count used is reported.
    """
    ctx.require_subcritical()
    if not getattr(mu, "is_nonnegative", True):
        raise ConfigError("Wolff potentials need a nonnegative measure")
    order = WOLFF_GAUSS_ORDER if quad_tol >= 1e-9 else 2 * WOLFF_GAUSS_ORDER
    potential = [wolff_potential(mu, ctx.s, q, order=order) for q in np.asarray(queries, dtype=float).reshape(-1, ctx.d)]
    sample = support_points(mu, max_support)
    sup = max((wolff_potential(mu, ctx.s, p, order=order) for p in sample), default=0.0)
    energy = wolff_energy(mu, ctx.s, order)
    infinite = math.isinf(sup) or math.isinf(energy) or any(math.isinf(v) for v in potential)
    note = "atoms have divergent Wolff integrals" if isinstance(mu, DiscreteMeasure) and mu.size else None
    return WolffReport(
        potential=potential,
        sup_support=sup,
        energy=energy,
        support_points=len(sample),
        infinite=infinite,
        note=note,
    )


def wolff_norm_ratio(mu: CubeMeasure, ctx: RieszContext, tol: float = 1e-10) -> Dict[str, float]:
    """Squared operator norm (atom surrogate) against the sup of W^mu over the support sample."""
    norm = operator_norm_sup(mu, ctx, tol).norm
    sup_w = max(wolff_potential(mu, ctx.s, p) for p in support_points(mu))
    return {"norm": norm, "sup_wolff": sup_w, "ratio": norm ** 2 / sup_w if sup_w > 0 else 0.0}


def weak_type_profile(eta: CubeMeasure, nu: DiscreteMeasure, ctx: RieszContext, t_grid: Sequence[float]) -> WeakTypeReport:
    """eta{x : R_{nu,*}(x) > t} * t / ||nu|| on a t-grid, eta integrated by its cube Gauss nodes."""
    nodes, weights = eta.gauss_nodes()
    values = maximal_transform_many(nu, ctx, nodes)
    norm = nu.total_variation
    mass_above = [math.fsum(weights[values > t]) for t in t_grid]
    scaled = [m * t / norm if norm > 0 else 0.0 for m, t in zip(mass_above, t_grid)]
    return WeakTypeReport(t_grid=list(map(float, t_grid)), mass_above=mass_above, scaled=scaled)
