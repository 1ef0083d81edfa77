"""
Riesz Service

Pointwise s-Riesz transforms of discrete measures: the eps-truncated transform,
the maximal transform (exact, from the finitely many distance breakpoints),
the smoothly cut-off transform and the symmetrized pair sum of a triple.
Batch variants evaluate many points in chunks.
"""

import itertools
import logging
import math
from typing import Iterator

import numpy as np

from app.config import EVAL_CHUNK
from app.exceptions import ConfigError
from app.models.riesz_schema import PairSumReport, VectorValue
from app.services.measure_service import DiscreteMeasure

logger = logging.getLogger(__name__)


def smoothstep(u):
    """Quintic S(u) = 6u^5 - 15u^4 + 10u^3 clipped to [0, 1]."""
    u = np.clip(u, 0.0, 1.0)
    return u ** 3 * (u * (6.0 * u - 15.0) + 10.0)


class RieszContext:
    """
    Exponent and dimension of the kernel K^s(x) = x / |x|^{s+1}.

    The cut-off profile is phi(t) = 1 on [0, 1], 1 - S(t - 1) on [1, 2] and 0
    beyond; the modified kernel weight is psi = 1 - phi.
    """

    def __init__(self, s: float, d: int):
        if not s > 0:
            raise ConfigError(f"Riesz exponent must be positive, got s={s}")
        if d < 1:
            raise ConfigError(f"dimension must be a positive integer, got d={d}")
        self.s = float(s)
        self.d = int(d)

    def kernel(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        r = np.linalg.norm(u, axis=-1, keepdims=True)
        return u / r ** (self.s + 1)

    @staticmethod
    def phi(t):
        return 1.0 - smoothstep(np.asarray(t, dtype=float) - 1.0)

    @staticmethod
    def psi(t):
        return smoothstep(np.asarray(t, dtype=float) - 1.0)

    def require_subcritical(self) -> None:
        if not self.s < self.d:
            raise ConfigError(f"this operation needs s < d, got s={self.s}, d={self.d}")

    def __repr__(self) -> str:
        return f"RieszContext(s={self.s:g}, d={self.d})"


def _check(nu: DiscreteMeasure, ctx: RieszContext, x) -> np.ndarray:
    if nu.d != ctx.d:
        raise ConfigError(f"measure dimension {nu.d} differs from context dimension {ctx.d}")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != ctx.d:
        raise ConfigError(f"evaluation point must have {ctx.d} coordinates")
    return x


def _fsum_columns(values: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(col) for col in values.T]) if values.size else np.zeros(values.shape[1])


def _neumaier_step(total: np.ndarray, comp: np.ndarray, x: np.ndarray):
    t = total + x
    comp = comp + np.where(np.abs(total) >= np.abs(x), (total - t) + x, (x - t) + total)
    return t, comp


def _settle(total: np.ndarray, comp: np.ndarray) -> np.ndarray:
    # an infinite running total has no meaningful correction
    return np.where(np.isfinite(total), total + comp, total)


def compensated_sum(terms: np.ndarray) -> np.ndarray:
    """Neumaier-compensated sum of ``terms`` along axis 1, vectorized over the other axes."""
    terms = np.asarray(terms, dtype=float)
    total = np.zeros(terms.shape[:1] + terms.shape[2:])
    comp = np.zeros_like(total)
    with np.errstate(invalid="ignore"):
        for j in range(terms.shape[1]):
            total, comp = _neumaier_step(total, comp, terms[:, j])
        return _settle(total, comp)


def compensated_suffix_sums(terms: np.ndarray) -> np.ndarray:
    """out[:, k] = compensated sum of terms[:, k:], axis 1 being the summation axis."""
    terms = np.asarray(terms, dtype=float)
    out = np.empty_like(terms)
    total = np.zeros(terms.shape[:1] + terms.shape[2:])
    comp = np.zeros_like(total)
    with np.errstate(invalid="ignore"):
        for j in range(terms.shape[1] - 1, -1, -1):
            total, comp = _neumaier_step(total, comp, terms[:, j])
            out[:, j] = _settle(total, comp)
    return out


def _contributions(nu: DiscreteMeasure, ctx: RieszContext, x: np.ndarray):
    diff = nu.points - x
    dist = np.linalg.norm(diff, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        contrib = nu.weights[:, None] * diff / dist[:, None] ** (ctx.s + 1)
    return dist, contrib


def truncated_transform(nu: DiscreteMeasure, ctx: RieszContext, x, eps: float) -> VectorValue:
    """
    R_{nu,eps}(x) = sum over |y_j - x| > eps of w_j (y_j - x) / |y_j - x|^{s+1}.

    Atoms at distance exactly eps are excluded; sums are exactly rounded.
    """
    if not eps > 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    x = _check(nu, ctx, x)
    dist, contrib = _contributions(nu, ctx, x)
    return VectorValue.from_array(_fsum_columns(contrib[dist > eps]))


def maximal_transform(nu: DiscreteMeasure, ctx: RieszContext, x) -> float:
    """
    sup over eps > 0 of |R_{nu,eps}(x)|.

    The truncated transform is constant between consecutive distinct atom
    distances, so the sup is a max over suffix sums in distance order. A point
    on an atom gives math.inf.
    """
    x = _check(nu, ctx, x)
    return float(maximal_transform_many(nu, ctx, x[None, :])[0])


def modified_transform(nu: DiscreteMeasure, ctx: RieszContext, x, eps: float) -> VectorValue:
    """Sum of psi(|y_j - x| / eps) w_j K^s(y_j - x); psi vanishes on [0, 1] and is 1 from 2 on."""
    if not eps > 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    x = _check(nu, ctx, x)
    dist, contrib = _contributions(nu, ctx, x)
    keep = dist > eps
    weight = ctx.psi(dist[keep] / eps)
    return VectorValue.from_array(_fsum_columns(contrib[keep] * weight[:, None]))


def symmetrized_pair_sum(x, y, z, s: float) -> PairSumReport:
    """
    q = K(x - z).K(y - z) + K(y - x).K(z - x) with its bound.

    The triple is relabeled so that |z - x| <= |z - y| <= |y - x|; the report
    lists the original indices in the order (x, y, z). The bound is
    2^{s+1} |y - x|^{-s-1} |z - x|^{-s+1}.
    """
    if not s > 0:
        raise ConfigError(f"s must be positive, got {s}")
    pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in (x, y, z)]
    if len({p.size for p in pts}) != 1:
        raise ConfigError("points must share a dimension")
    for a, b in itertools.combinations(range(3), 2):
        if np.array_equal(pts[a], pts[b]):
            raise ConfigError("symmetrized_pair_sum needs three distinct points")
    ctx = RieszContext(s, pts[0].size)
    for perm in itertools.permutations(range(3)):
        px, py, pz = (pts[i] for i in perm)
        zx, zy, yx = np.linalg.norm(pz - px), np.linalg.norm(pz - py), np.linalg.norm(py - px)
        if zx <= zy <= yx:
            break
    q = float(ctx.kernel(px - pz) @ ctx.kernel(py - pz) + ctx.kernel(py - px) @ ctx.kernel(pz - px))
    bound = 2.0 ** (s + 1) * yx ** (-s - 1) * zx ** (-s + 1)
    return PairSumReport(q=q, bound=float(bound), permutation=list(perm))


def _chunks(n_points: int, n_atoms: int) -> Iterator[slice]:
    rows = max(1, (EVAL_CHUNK * 256) // max(n_atoms, 1))
    for start in range(0, n_points, rows):
        yield slice(start, min(start + rows, n_points))


def _prepare(nu: DiscreteMeasure, ctx: RieszContext, points) -> np.ndarray:
    if nu.d != ctx.d:
        raise ConfigError(f"measure dimension {nu.d} differs from context dimension {ctx.d}")
    pts = np.asarray(points, dtype=float).reshape(-1, ctx.d)
    return pts


def _block(nu: DiscreteMeasure, ctx: RieszContext, pts: np.ndarray):
    diff = nu.points[None, :, :] - pts[:, None, :]
    dist = np.linalg.norm(diff, axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        contrib = nu.weights[None, :, None] * diff / dist[:, :, None] ** (ctx.s + 1)
    return dist, contrib


def truncated_transform_many(nu: DiscreteMeasure, ctx: RieszContext, points, eps: float) -> np.ndarray:
    """R_{nu,eps} at every row of ``points``; eps = 0 drops only atoms sitting on the point."""
    if eps < 0:
        raise ConfigError(f"eps must be nonnegative, got {eps}")
    pts = _prepare(nu, ctx, points)
    out = np.zeros((pts.shape[0], ctx.d))
    for sl in _chunks(pts.shape[0], nu.size):
        dist, contrib = _block(nu, ctx, pts[sl])
        out[sl] = compensated_sum(np.where((dist > eps)[:, :, None], contrib, 0.0))
    return out


def modified_transform_many(nu: DiscreteMeasure, ctx: RieszContext, points, eps: float) -> np.ndarray:
    if not eps > 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    pts = _prepare(nu, ctx, points)
    out = np.zeros((pts.shape[0], ctx.d))
    for sl in _chunks(pts.shape[0], nu.size):
        dist, contrib = _block(nu, ctx, pts[sl])
        weight = np.where(dist > eps, ctx.psi(dist / eps), 0.0)
        out[sl] = compensated_sum(np.where(weight[:, :, None] > 0, contrib * weight[:, :, None], 0.0))
    return out


def maximal_transform_many(nu: DiscreteMeasure, ctx: RieszContext, points) -> np.ndarray:
    """R_{nu,*} at every row of ``points``; inf where a point sits on an atom."""
    pts = _prepare(nu, ctx, points)
    out = np.zeros(pts.shape[0])
    if nu.size == 0:
        return out
    for sl in _chunks(pts.shape[0], nu.size):
        dist, contrib = _block(nu, ctx, pts[sl])
        order = np.argsort(dist, axis=1, kind="stable")
        dist = np.take_along_axis(dist, order, axis=1)
        contrib = np.take_along_axis(contrib, order[:, :, None], axis=1)
        suffix = compensated_suffix_sums(contrib)
        valid = np.ones_like(dist, dtype=bool)
        valid[:, 1:] = dist[:, 1:] > dist[:, :-1]
        mags = np.where(valid, np.linalg.norm(suffix, axis=2), 0.0)
        best = mags.max(axis=1)
        best[dist[:, 0] == 0] = math.inf
        out[sl] = best
    return out


def absolute_potential_many(nu: DiscreteMeasure, s: float, points) -> np.ndarray:
    """sum_j |w_j| / |y_j - x|^s, the potential whose superlevel set contains the maximal one."""
    pts = np.asarray(points, dtype=float).reshape(-1, nu.d)
    out = np.zeros(pts.shape[0])
    for sl in _chunks(pts.shape[0], nu.size):
        dist = np.linalg.norm(nu.points[None, :, :] - pts[sl][:, None, :], axis=2)
        with np.errstate(divide="ignore"):
            out[sl] = compensated_sum(np.abs(nu.weights)[None, :] / dist ** s)
    return out


def pair_sum_batch(X, Y, Z, s: float):
    """
    Vectorized symmetrized_pair_sum over T triples (rows of X, Y, Z).

    Returns:
        (q, bound) arrays after relabeling each triple so that z is opposite the
        longest side and x is its endpoint nearer to z
    """
    P = np.stack([np.asarray(A, dtype=float).reshape(len(A), -1) for A in (X, Y, Z)], axis=1)
    T = P.shape[0]
    D = np.linalg.norm(P[:, :, None, :] - P[:, None, :, :], axis=3)
    if np.any(D[:, [0, 0, 1], [1, 2, 2]] == 0):
        raise ConfigError("pair_sum_batch needs three distinct points per triple")
    rows = np.arange(T)
    zi = np.argmax(np.stack([D[:, 1, 2], D[:, 0, 2], D[:, 0, 1]], axis=1), axis=1)
    others = np.array([[1, 2], [0, 2], [0, 1]])[zi]
    closer = D[rows, others[:, 0], zi] <= D[rows, others[:, 1], zi]
    xi = np.where(closer, others[:, 0], others[:, 1])
    yi = np.where(closer, others[:, 1], others[:, 0])
    px, py, pz = P[rows, xi], P[rows, yi], P[rows, zi]
    ctx = RieszContext(s, P.shape[2])
    q = np.einsum("ij,ij->i", ctx.kernel(px - pz), ctx.kernel(py - pz)) + np.einsum(
        "ij,ij->i", ctx.kernel(py - px), ctx.kernel(pz - px)
    )
    yx = D[rows, xi, yi]
    zx = D[rows, xi, zi]
    bound = 2.0 ** (s + 1) * yx ** (-s - 1) * zx ** (-s + 1)
    return q, bound
