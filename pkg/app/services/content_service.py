"""
Content Service

Hausdorff-content estimation on dyadic cell sets: the optimal dyadic covering
cost (upper bound), the dual Frostman mass (lower bound), superlevel sets of
Riesz potentials on a grid of cell centers, and the diagnostics used in the
truncation and normality arguments.
"""

import logging
import math
from typing import Dict, Optional, Sequence

import numpy as np
from scipy import ndimage

from app.config import EVAL_CHUNK
from app.exceptions import ConfigError
from app.models.content_schema import ContentBracket, NormalityReport
from app.models.experiment_schema import WindowSpec
from app.services.gauge_service import GaugeFunction, log_grid, truncate_gauge
from app.services.measure_service import DiscreteMeasure, frostman_measure
from app.services.riesz_service import (
    RieszContext,
    absolute_potential_many,
    maximal_transform_many,
    truncated_transform_many,
)

logger = logging.getLogger(__name__)

SUPERLEVEL_MODES = ("maximal", "fixed_eps", "absolute")


class DyadicCellSet:
    """
    Finest-level cells of a dyadic grid of depth m inside a root cube.

    ``index`` holds unique integer multi-indices in [0, 2^m)^d.
    """

    def __init__(self, corner: Sequence[float], side: float, depth: int, index):
        self.corner = np.atleast_1d(np.asarray(corner, dtype=float))
        if not side > 0:
            raise ConfigError(f"root side must be positive, got {side}")
        if depth < 0:
            raise ConfigError(f"depth must be nonnegative, got {depth}")
        self.side = float(side)
        self.depth = int(depth)
        self.d = self.corner.size
        idx = np.asarray(index, dtype=np.int64).reshape(-1, self.d)
        if idx.size and (idx.min() < 0 or idx.max() >= 2 ** self.depth):
            raise ConfigError("cell indices must lie inside the root cube")
        self.index = np.unique(idx, axis=0) if idx.shape[0] else idx
        self.index.flags.writeable = False

    @classmethod
    def full(cls, corner, side: float, depth: int) -> "DyadicCellSet":
        corner = np.atleast_1d(np.asarray(corner, dtype=float))
        return cls(corner, side, depth, grid_indices(corner.size, depth))

    @classmethod
    def from_mask(cls, corner, side: float, mask: np.ndarray) -> "DyadicCellSet":
        depth = int(round(math.log2(mask.shape[0])))
        return cls(corner, side, depth, np.argwhere(mask))

    @classmethod
    def from_points(cls, points, corner, side: float, depth: int) -> "DyadicCellSet":
        """Cells containing the given points; points outside the root are dropped."""
        corner = np.atleast_1d(np.asarray(corner, dtype=float))
        pts = np.asarray(points, dtype=float).reshape(-1, corner.size)
        idx = np.floor((pts - corner) / (side / 2 ** depth)).astype(np.int64)
        inside = np.all((idx >= 0) & (idx < 2 ** depth), axis=1)
        return cls(corner, side, depth, idx[inside])

    @property
    def count(self) -> int:
        return self.index.shape[0]

    @property
    def cell_side(self) -> float:
        return self.side / 2 ** self.depth

    def centers(self) -> np.ndarray:
        return self.corner + (self.index + 0.5) * self.cell_side

    def to_mask(self) -> np.ndarray:
        mask = np.zeros((2 ** self.depth,) * self.d, dtype=bool)
        if self.count:
            mask[tuple(self.index.T)] = True
        return mask

    def subset(self, keep: np.ndarray) -> "DyadicCellSet":
        return DyadicCellSet(self.corner, self.side, self.depth, self.index[keep])

    def union(self, other: "DyadicCellSet") -> "DyadicCellSet":
        if other.depth != self.depth or other.side != self.side or not np.array_equal(other.corner, self.corner):
            raise ConfigError("union needs cell sets on the same grid")
        return DyadicCellSet(self.corner, self.side, self.depth, np.vstack([self.index, other.index]))

    def touches_boundary(self) -> bool:
        """True when a marked cell sits on the outer layer of the root cube."""
        if not self.count:
            return False
        return bool(np.any(self.index == 0) or np.any(self.index == 2 ** self.depth - 1))

    def __len__(self) -> int:
        return self.count

    def __repr__(self) -> str:
        return f"DyadicCellSet(d={self.d}, depth={self.depth}, cells={self.count})"


def grid_indices(d: int, depth: int) -> np.ndarray:
    n = 2 ** depth
    return np.indices((n,) * d).reshape(d, -1).T


def _radius(side: float, d: int) -> float:
    return side * math.sqrt(d) / 2.0


def covering_upper_bound(cells: DyadicCellSet, h: GaugeFunction) -> float:
    """
    Optimal cost over dyadic coverings, a cube of side a priced h(a sqrt(d)/2).

    Bottom-up: cost(Q) = min(h(r_Q), sum of the children's costs).
    """
    if cells.count == 0:
        return 0.0
    m, d = cells.depth, cells.d
    keys = cells.index
    cost = np.full(cells.count, float(h(_radius(cells.cell_side, d))))
    for level in range(m - 1, -1, -1):
        keys, inverse = np.unique(keys >> 1, axis=0, return_inverse=True)
        children = np.zeros(keys.shape[0])
        np.add.at(children, inverse.reshape(-1), cost)
        cost = np.minimum(children, float(h(_radius(cells.side / 2 ** level, d))))
    return float(cost[0])


def subtree_masses(cells: DyadicCellSet, weights: np.ndarray) -> Dict[int, np.ndarray]:
    """Mass of every occupied dyadic cube, per level (level -> array over occupied cubes)."""
    m = cells.depth
    out = {}
    for level in range(m, -1, -1):
        _, inverse = np.unique(cells.index >> (m - level), axis=0, return_inverse=True)
        out[level] = np.bincount(inverse.reshape(-1), weights=weights)
    return out


def frostman_lower_bound(cells: DyadicCellSet, h: GaugeFunction) -> Dict[str, object]:
    """Dyadic Frostman measure on the cells and its total mass."""
    mu = frostman_measure(cells, h)
    return {"mu": mu, "mass": mu.total_variation}


def ball_cube_constant(d: int) -> float:
    """C_d with h(side) <= C_d h(side sqrt(d)/2) for every admissible gauge."""
    return max(1.0, (2.0 / math.sqrt(d)) ** d)


def content_bracket(cells: DyadicCellSet, h: GaugeFunction) -> ContentBracket:
    """Upper covering cost and the Frostman mass normalized by C_d, so lower <= upper."""
    upper = covering_upper_bound(cells, h)
    mass = frostman_lower_bound(cells, h)["mass"] if cells.count else 0.0
    c_d = ball_cube_constant(cells.d)
    return ContentBracket(
        upper=upper,
        lower=mass / c_d,
        gauge_id=h.label or h.kind,
        metadata={
            "depth": float(cells.depth),
            "cells": float(cells.count),
            "cell_side": cells.cell_side,
            "C_d": c_d,
            "frostman_mass": mass,
        },
    )


def random_covering_cost(cells: DyadicCellSet, h: GaugeFunction, rng: np.random.Generator, p_stop: float = 0.3) -> float:
    """Cost of a random valid dyadic covering: each occupied cube stops with probability p_stop."""
    m, d = cells.depth, cells.d
    uncovered = np.ones(cells.count, dtype=bool)
    total = 0.0
    for level in range(m + 1):
        if not uncovered.any():
            break
        keys, inverse = np.unique(cells.index[uncovered] >> (m - level), axis=0, return_inverse=True)
        stop = rng.random(keys.shape[0]) < p_stop if level < m else np.ones(keys.shape[0], dtype=bool)
        total += stop.sum() * float(h(_radius(cells.side / 2 ** level, d)))
        covered_now = stop[inverse.reshape(-1)]
        positions = np.flatnonzero(uncovered)
        uncovered[positions[covered_now]] = False
    return total


def _window(window, d: int):
    if isinstance(window, WindowSpec):
        corner, side = window.corner, window.side
    else:
        corner, side = window
    corner = np.atleast_1d(np.asarray(corner, dtype=float))
    if corner.size != d:
        raise ConfigError(f"window corner must have {d} coordinates")
    return corner, float(side)


def superlevel_cells(
    nu: DiscreteMeasure,
    ctx: RieszContext,
    P: float,
    window,
    depth: int,
    mode: str = "maximal",
    eps: Optional[float] = None,
) -> DyadicCellSet:
    """
    Cells of the window grid whose centers lie in a superlevel set.

    Modes: ``maximal`` marks R_{nu,*} > P, ``fixed_eps`` marks |R_{nu,eps}| > P
    and ``absolute`` marks sum |w_j| / |y_j - x|^s > P. Centers sitting on an
    atom count as marked.
    """
    if not P > 0:
        raise ConfigError(f"threshold P must be positive, got {P}")
    if mode not in SUPERLEVEL_MODES:
        raise ConfigError(f"mode must be one of {SUPERLEVEL_MODES}, got '{mode}'")
    if mode == "fixed_eps" and not (eps is not None and eps > 0):
        raise ConfigError("fixed_eps mode needs a positive eps")
    corner, side = _window(window, ctx.d)
    idx = grid_indices(ctx.d, depth)
    centers = corner + (idx + 0.5) * (side / 2 ** depth)
    marked = np.zeros(idx.shape[0], dtype=bool)
    rows = max(1, EVAL_CHUNK)
    for start in range(0, idx.shape[0], rows):
        pts = centers[start:start + rows]
        if mode == "maximal":
            values = maximal_transform_many(nu, ctx, pts)
        elif mode == "fixed_eps":
            values = np.linalg.norm(truncated_transform_many(nu, ctx, pts, eps), axis=1)
        else:
            values = absolute_potential_many(nu, ctx.s, pts)
        marked[start:start + rows] = values > P
    cells = DyadicCellSet(corner, side, depth, idx[marked])
    logger.debug("superlevel_cells(%s, P=%g): %d of %d cells", mode, P, cells.count, idx.shape[0])
    return cells


def dilate_cells(cells: DyadicCellSet, radius: float) -> DyadicCellSet:
    """
    Union of balls of the given radius around the cell centers, on the same cell size.

    The root grows by whole cells on every side (and to the next power of two).
    """
    if radius < 0:
        raise ConfigError(f"dilation radius must be nonnegative, got {radius}")
    cell = cells.cell_side
    k = int(math.floor(radius / cell + 1e-9))
    if k == 0 or cells.count == 0:
        return cells
    n = 2 ** cells.depth
    depth = int(math.ceil(math.log2(n + 2 * k)))
    size = 2 ** depth
    mask = np.zeros((size,) * cells.d, dtype=bool)
    mask[tuple((cells.index + k).T)] = True
    offsets = np.indices((2 * k + 1,) * cells.d) - k
    structure = np.sqrt((offsets ** 2).sum(axis=0)) * cell <= radius
    grown = ndimage.binary_dilation(mask, structure=structure)
    return DyadicCellSet(cells.corner - k * cell, size * cell, depth, np.argwhere(grown))


def truncation_check(cells: DyadicCellSet, h: GaugeFunction, t1: float, alpha: float = 1.0) -> Dict[str, float]:
    """
    Compare the h-content of F with the truncated-gauge content of its dilation G.

    G is the union of balls of radius alpha * t1 around F.
    """
    dilated = dilate_cells(cells, alpha * t1)
    content_f = covering_upper_bound(cells, h)
    content_g = covering_upper_bound(dilated, truncate_gauge(h, t1))
    return {
        "content_F": content_f,
        "content_G": content_g,
        "ratio": content_f / content_g if content_g > 0 else math.inf,
    }


def normality_exclusion(
    nu: DiscreteMeasure,
    h: GaugeFunction,
    s: float,
    cells: DyadicCellSet,
    P: float,
    M: Optional[float] = None,
    C2: float = 1.0,
) -> NormalityReport:
    """
    Cells whose centers fail |nu|(B(x,r)) <= P h(r) / (C2 rho) for some r, and their covering cost.

    t1 = h^{-1}(0.1 M / N), t2 = h^{-1}(M), rho = max over [t1, t2] of h(t)/t^s;
    M defaults to the covering cost of ``cells``.
    """
    total = covering_upper_bound(cells, h)
    M = total if M is None else M
    N = nu.size
    if M <= 0 or N == 0:
        return NormalityReport(t1=0.0, t2=0.0, rho=0.0, excluded_cells=0, excluded_cost=0.0, total_cost=total)
    t1 = float(h.inverse(0.1 * M / N))
    t2 = float(h.inverse(M))
    grid = log_grid(t1, t2, 64) if t2 > t1 else np.array([t1])
    rho = float(np.max(h(grid) / grid ** s))
    threshold = P / (C2 * rho)
    weights = np.abs(nu.weights)
    centers = cells.centers()
    bad = np.zeros(cells.count, dtype=bool)
    rows = max(1, (EVAL_CHUNK * 256) // max(N, 1))
    for start in range(0, cells.count, rows):
        dist = np.linalg.norm(centers[start:start + rows, None, :] - nu.points[None, :, :], axis=2)
        order = np.argsort(dist, axis=1)
        dist = np.take_along_axis(dist, order, axis=1)
        cum = np.cumsum(weights[order], axis=1)
        # |nu|(B(x, r)) for r just above each atom distance
        bad[start:start + rows] = np.any(cum > threshold * h(np.maximum(dist, 1e-300)), axis=1)
    excluded = cells.subset(bad)
    return NormalityReport(
        t1=t1,
        t2=t2,
        rho=rho,
        excluded_cells=excluded.count,
        excluded_cost=covering_upper_bound(excluded, h),
        total_cost=total,
    )
