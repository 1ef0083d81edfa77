"""
Measure Service

Finite measures used throughout the laboratory:

- DiscreteMeasure: signed point masses with total-variation bookkeeping
- CubeMeasure: disjoint cubes carrying uniform density (intervals, base cubes)
- CantorMeasure: the corner Cantor construction with its theta sequence
- DensityMeasure: a density on a bounded box plus optional atoms, input of
  the mesh discretization

All measures are immutable after construction and answer open-ball mass
queries exactly.
"""

import itertools
import logging
import math
from typing import TYPE_CHECKING, Callable, List, Optional, Sequence, Union

import numpy as np
from pydantic import TypeAdapter, ValidationError

from app.config import ATOM_MERGE_TOL, BALL_SUBDIVISION_DEPTH, CUBE_GAUSS_ORDER
from app.exceptions import ConfigError
from app.models.measure_schema import AtomSpec, CantorSpec
from app.services.gauge_service import GaugeFunction

if TYPE_CHECKING:
    from app.services.content_service import DyadicCellSet

logger = logging.getLogger(__name__)

_ATOM_LIST = TypeAdapter(List[AtomSpec])


def _as_points(points, d: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, d or 1)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if d in (None, 1) else arr.reshape(1, -1)
    if d is not None and arr.shape[1] != d:
        raise ConfigError(f"points must have {d} coordinates, got shape {arr.shape}")
    return arr


def corner_offsets(d: int) -> np.ndarray:
    """All b in {0,1}^d in lexicographic bit order."""
    return np.array(list(itertools.product((0.0, 1.0), repeat=d)))


class DiscreteMeasure:
    """
    Finite signed combination of Dirac masses in R^d.

    Atoms closer than ``merge_tol`` times the configuration scale are merged and
    zero weights dropped, keeping the first-seen order of the remaining atoms.
    """

    kind = "discrete"

    def __init__(self, points, weights, d: Optional[int] = None, merge_tol: float = ATOM_MERGE_TOL, label: str = ""):
        pts = _as_points(points, d)
        w = np.broadcast_to(np.asarray(weights, dtype=float), (pts.shape[0],)).copy()
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(w)):
            raise ConfigError("atom locations and weights must be finite")
        self.d = pts.shape[1] if pts.size else (d or 1)
        pts, w = self._merge(pts, w, merge_tol)
        keep = w != 0
        self.points = pts[keep]
        self.weights = w[keep]
        self.points.flags.writeable = False
        self.weights.flags.writeable = False
        self.label = label or f"discrete:{self.size}"

    @staticmethod
    def _merge(pts: np.ndarray, w: np.ndarray, merge_tol: float):
        if pts.shape[0] < 2 or merge_tol <= 0:
            return pts, w
        scale = max(float(np.ptp(pts, axis=0).max()), float(np.abs(pts).max()), 1e-300)
        keys = np.round(pts / (merge_tol * scale)).astype(np.int64)
        _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        if first.size == pts.shape[0]:
            return pts, w
        inverse = inverse.reshape(-1)
        order = np.argsort(first)
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        merged = np.zeros(first.size)
        np.add.at(merged, rank[inverse], w)
        logger.debug("merged %d coincident atoms", pts.shape[0] - first.size)
        return pts[first[order]], merged

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def total_variation(self) -> float:
        return math.fsum(np.abs(self.weights))

    @property
    def total(self) -> float:
        return math.fsum(self.weights)

    @property
    def is_nonnegative(self) -> bool:
        return bool(np.all(self.weights > 0))

    @property
    def measure_id(self) -> str:
        return self.label

    def distances(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        return np.linalg.norm(self.points - x, axis=1)

    def ball_mass(self, x, r: float) -> float:
        """|nu|(B(x, r)) for the open ball."""
        if r <= 0 or self.size == 0:
            return 0.0
        return math.fsum(np.abs(self.weights[self.distances(x) < r]))

    def ball_mass_profile(self, x, radii) -> np.ndarray:
        """|nu|(B(x, r)) for every r in ``radii``."""
        dist = self.distances(x)
        order = np.argsort(dist)
        cum = np.concatenate([[0.0], np.cumsum(np.abs(self.weights[order]))])
        return cum[np.searchsorted(dist[order], np.asarray(radii, dtype=float), side="left")]

    def diameter(self) -> float:
        if self.size < 2:
            return 0.0
        lo, hi = self.points.min(axis=0), self.points.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def support_sample(self) -> np.ndarray:
        return self.points

    def scaled(self, c: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points, c * self.weights, self.d, label=self.label)

    def dilated(self, lam: float) -> "DiscreteMeasure":
        return DiscreteMeasure(lam * self.points, self.weights, self.d, label=self.label)

    def translated(self, v) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points + np.asarray(v, dtype=float), self.weights, self.d, label=self.label)

    def absolute(self) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points, np.abs(self.weights), self.d, label=self.label)

    def to_json(self) -> list:
        return [{"x": [float(c) for c in p], "w": float(w)} for p, w in zip(self.points, self.weights)]

    @classmethod
    def from_json(cls, data) -> "DiscreteMeasure":
        try:
            atoms = _ATOM_LIST.validate_python(data)
        except ValidationError as exc:
            raise ConfigError(f"invalid atom list: {exc.errors()[0]['loc']} {exc.errors()[0]['msg']}") from exc
        if not atoms:
            raise ConfigError("atom list is empty")
        dims = {len(a.x) for a in atoms}
        if len(dims) != 1:
            raise ConfigError(f"atoms mix dimensions {sorted(dims)}")
        return cls([a.x for a in atoms], [a.w for a in atoms], d=dims.pop())

    def __repr__(self) -> str:
        return f"DiscreteMeasure(d={self.d}, atoms={self.size}, |nu|={self.total_variation:g})"


def _G(x: float, r: float) -> float:
    """int_0^x sqrt(r^2 - u^2) du for |x| <= r."""
    x = min(max(x, -r), r)
    return 0.5 * (x * math.sqrt(max(r * r - x * x, 0.0)) + r * r * math.asin(x / r))


def _corner_area(a: float, b: float, r: float) -> float:
    """Area of the disk of radius r at 0 intersected with {u < a, v < b}."""
    if a <= -r or b <= -r:
        return 0.0
    top = min(a, r)
    if b >= r:
        return 2.0 * (_G(top, r) - _G(-r, r))
    c = math.sqrt(r * r - b * b)

    def band(p, q, full):
        p, q = max(p, -r), min(q, top)
        if q <= p:
            return 0.0
        w = _G(q, r) - _G(p, r)
        return 2.0 * w if full else b * (q - p) + w

    if b >= 0:
        return band(-r, -c, True) + band(-c, c, False) + band(c, r, True)
    return band(-c, c, False)


def _disk_rect_area(x0: float, x1: float, y0: float, y1: float, r: float) -> float:
    return (
        _corner_area(x1, y1, r) - _corner_area(x0, y1, r) - _corner_area(x1, y0, r) + _corner_area(x0, y0, r)
    )


def _subdivided_volume(corner: np.ndarray, side: float, x: np.ndarray, r: float, depth: int) -> float:
    d = corner.size
    corners = corner.reshape(1, d)
    offsets = corner_offsets(d)
    total = 0.0
    for level in range(depth + 1):
        near = np.clip(x, corners, corners + side)
        mind = np.linalg.norm(near - x, axis=1)
        far = np.linalg.norm(np.maximum(np.abs(corners - x), np.abs(corners + side - x)), axis=1)
        inside = far <= r
        total += inside.sum() * side ** d
        partial = ~inside & (mind < r)
        corners = corners[partial]
        if level == depth or corners.size == 0:
            break
        side *= 0.5
        corners = (corners[:, None, :] + side * offsets[None, :, :]).reshape(-1, d)
    if corners.size:
        centers = corners + 0.5 * side
        total += np.count_nonzero(np.linalg.norm(centers - x, axis=1) < r) * side ** d
    return total


def cube_ball_volume(corners: np.ndarray, side: float, x, r: float) -> np.ndarray:
    """
    Volume of each cube [c, c + side]^d inside the open ball B(x, r).

    Exact in d = 1 and d = 2; adaptive subdivision in higher dimension.
    """
    corners = np.asarray(corners, dtype=float)
    x = np.asarray(x, dtype=float).reshape(-1)
    d = corners.shape[1]
    if r <= 0 or corners.shape[0] == 0:
        return np.zeros(corners.shape[0])
    if d == 1:
        lo = np.maximum(corners[:, 0], x[0] - r)
        hi = np.minimum(corners[:, 0] + side, x[0] + r)
        return np.clip(hi - lo, 0.0, None)
    near = np.clip(x, corners, corners + side)
    mind = np.linalg.norm(near - x, axis=1)
    far = np.linalg.norm(np.maximum(np.abs(corners - x), np.abs(corners + side - x)), axis=1)
    out = np.where(far <= r, side ** d, 0.0)
    for i in np.flatnonzero((far > r) & (mind < r)):
        rel = corners[i] - x
        if d == 2:
            out[i] = _disk_rect_area(rel[0], rel[0] + side, rel[1], rel[1] + side, r)
        else:
            out[i] = _subdivided_volume(corners[i], side, x, r, BALL_SUBDIVISION_DEPTH)
    return out


class CubeMeasure:
    """Disjoint axis-aligned cubes of common edge ``side``, each with uniform density."""

    kind = "cubes"

    def __init__(self, corners, side: float, masses, label: str = ""):
        self.corners = _as_points(corners)
        if not side > 0:
            raise ConfigError(f"cube side must be positive, got {side}")
        self.side = float(side)
        self.masses = np.broadcast_to(np.asarray(masses, dtype=float), (self.corners.shape[0],)).copy()
        if np.any(self.masses < 0):
            raise ConfigError("cube masses must be nonnegative")
        self.d = self.corners.shape[1]
        self.corners.flags.writeable = False
        self.masses.flags.writeable = False
        self.label = label or f"cubes:{self.corners.shape[0]}"

    @classmethod
    def lebesgue(cls, corner, side: float) -> "CubeMeasure":
        """Lebesgue measure restricted to one cube."""
        corner = np.atleast_1d(np.asarray(corner, dtype=float))
        return cls(corner.reshape(1, -1), side, side ** corner.size, label=f"lebesgue:{side:g}")

    @property
    def size(self) -> int:
        return self.masses.size

    @property
    def total_variation(self) -> float:
        return math.fsum(self.masses)

    @property
    def is_nonnegative(self) -> bool:
        return True

    @property
    def measure_id(self) -> str:
        return self.label

    @property
    def centers(self) -> np.ndarray:
        return self.corners + 0.5 * self.side

    def ball_mass(self, x, r: float) -> float:
        vol = cube_ball_volume(self.corners, self.side, x, r)
        return math.fsum(self.masses * vol / self.side ** self.d)

    def ball_mass_profile(self, x, radii) -> np.ndarray:
        return np.array([self.ball_mass(x, r) for r in np.asarray(radii, dtype=float)])

    def bounding_box(self):
        return self.corners.min(axis=0), self.corners.max(axis=0) + self.side

    def diameter(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def atom_surrogate(self) -> DiscreteMeasure:
        """One atom per cube at its center carrying the cube's mass."""
        return DiscreteMeasure(self.centers, self.masses, self.d, label=f"{self.label}:atoms")

    def gauss_nodes(self, order: int = CUBE_GAUSS_ORDER):
        """Tensor Gauss-Legendre nodes and weights integrating against this measure."""
        x, w = np.polynomial.legendre.leggauss(order)
        x = 0.5 * (x + 1.0) * self.side
        w = 0.5 * w
        grid = np.array(list(itertools.product(x, repeat=self.d)))
        gw = np.prod(np.array(list(itertools.product(w, repeat=self.d))), axis=1)
        nodes = (self.corners[:, None, :] + grid[None, :, :]).reshape(-1, self.d)
        weights = (self.masses[:, None] * gw[None, :]).reshape(-1)
        return nodes, weights

    def support_sample(self) -> np.ndarray:
        """Corners and centers of every cube."""
        offsets = corner_offsets(self.d) * self.side
        corners = (self.corners[:, None, :] + offsets[None, :, :]).reshape(-1, self.d)
        return np.unique(np.vstack([corners, self.centers]), axis=0)

    def scaled(self, c: float) -> "CubeMeasure":
        return CubeMeasure(self.corners, self.side, c * self.masses, label=self.label)

    def dilated(self, lam: float) -> "CubeMeasure":
        return CubeMeasure(lam * self.corners, lam * self.side, self.masses, label=self.label)

    def translated(self, v) -> "CubeMeasure":
        return CubeMeasure(self.corners + np.asarray(v, dtype=float), self.side, self.masses, label=self.label)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(d={self.d}, cubes={self.size}, side={self.side:g})"


class CantorMeasure(CubeMeasure):
    """
    Uniform measure on the n-th generation of the corner Cantor construction.

    Every level-k cube carries mass 2^{-kd}; theta_k = 2^{-kd} / ell_k^s.
    """

    kind = "cantor"

    def __init__(self, spec: CantorSpec, s: float, corners: np.ndarray):
        n, d = spec.n, spec.d
        super().__init__(corners, spec.ell[-1], 2.0 ** (-n * d), label=f"cantor:d{d}n{n}")
        self.spec = spec
        self.s = float(s)
        self.ell = np.asarray(spec.ell, dtype=float)
        self.theta = np.array([2.0 ** (-k * d) / self.ell[k] ** s for k in range(n + 1)])

    @property
    def n(self) -> int:
        return self.spec.n

    def ball_mass(self, x, r: float) -> float:
        """Exact mass of B(x, r) by descending the cube tree with inside/outside pruning."""
        if r <= 0:
            return 0.0
        x = np.asarray(x, dtype=float).reshape(-1)
        d, n = self.d, self.n
        offsets = corner_offsets(d)
        corners = np.zeros((1, d))
        total = 0.0
        for k in range(n + 1):
            side = self.ell[k]
            near = np.clip(x, corners, corners + side)
            mind = np.linalg.norm(near - x, axis=1)
            far = np.linalg.norm(np.maximum(np.abs(corners - x), np.abs(corners + side - x)), axis=1)
            inside = far <= r
            total += inside.sum() * 2.0 ** (-k * d)
            partial = ~inside & (mind < r)
            corners = corners[partial]
            if corners.size == 0:
                return total
            if k < n:
                step = self.ell[k] - self.ell[k + 1]
                corners = (corners[:, None, :] + step * offsets[None, :, :]).reshape(-1, d)
        vol = cube_ball_volume(corners, self.ell[n], x, r)
        return total + math.fsum(vol) / self.ell[n] ** d * 2.0 ** (-n * d)

    def scaled(self, c: float) -> CubeMeasure:
        return CubeMeasure(self.corners, self.side, c * self.masses, label=self.label)

    def dilated(self, lam: float) -> CubeMeasure:
        return CubeMeasure(lam * self.corners, lam * self.side, self.masses, label=self.label)

    def translated(self, v) -> CubeMeasure:
        return CubeMeasure(self.corners + np.asarray(v, dtype=float), self.side, self.masses, label=self.label)


def build_cantor(spec: CantorSpec, s: float) -> CantorMeasure:
    """
    Corner construction: each level-k cube keeps its 2^d corner subcubes of edge ell_{k+1}.

    Args:
        spec: Dimension, edge lengths ell_0..ell_n and lambda
        s: Riesz exponent used for theta, 0 < s < d

    Returns:
        CantorMeasure with 2^{nd} base cubes in lexicographic bit order
    """
    if not 0 < s < spec.d:
        raise ConfigError(f"build_cantor needs 0 < s < d={spec.d}, got s={s}")
    for k in range(spec.n):
        if not 0 < spec.ell[k + 1] < spec.lam * spec.ell[k]:
            raise ConfigError(f"ell[{k + 1}] must lie in (0, lambda*ell[{k}])")
    d = spec.d
    offsets = corner_offsets(d)
    corners = np.zeros((1, d))
    for k in range(spec.n):
        step = spec.ell[k] - spec.ell[k + 1]
        corners = (corners[:, None, :] + step * offsets[None, :, :]).reshape(-1, d)
    logger.debug("built Cantor measure d=%d n=%d with %d base cubes", d, spec.n, corners.shape[0])
    return CantorMeasure(spec, s, corners)


def ball_mass(mu, x, r: float) -> float:
    """Mass (variation for signed measures) of the open ball B(x, r)."""
    if r < 0:
        raise ConfigError(f"radius must be nonnegative, got {r}")
    return mu.ball_mass(x, r)


def frostman_measure(cells: "DyadicCellSet", h: GaugeFunction) -> DiscreteMeasure:
    """
    Dyadic Frostman measure on a cell set.

    Each finest cell starts with h(side); walking up the tree, every cube whose
    subtree mass exceeds h(side(Q)) is scaled down to exactly h(side(Q)).

    Args:
        cells: Finest-level dyadic cells inside a root cube
        h: Gauge pricing a cube by its side

    Returns:
        One atom per cell at its center with mu(Q) <= h(side(Q)) for all dyadic Q
    """
    if cells.count == 0:
        raise ConfigError("frostman_measure needs a nonempty cell set")
    m = cells.depth
    mass = np.full(cells.count, float(h(cells.cell_side)))
    for level in range(m - 1, -1, -1):
        _, inverse = np.unique(cells.index >> (m - level), axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        node = np.bincount(inverse, weights=mass)
        cap = float(h(cells.side / 2 ** level))
        factor = np.minimum(1.0, cap / node)
        mass = mass * factor[inverse]
    return DiscreteMeasure(cells.centers(), mass, cells.d, merge_tol=0.0, label=f"frostman:{cells.count}")


class DensityMeasure:
    """
    Signed density on a bounded box, optionally with point masses.

    ``density`` maps an (K, d) array of points to K values and is taken to be
    zero outside the box.
    """

    kind = "density"

    def __init__(
        self,
        lower: Sequence[float],
        upper: Sequence[float],
        density: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        atoms: Optional[DiscreteMeasure] = None,
        label: str = "density",
    ):
        self.lower = np.atleast_1d(np.asarray(lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ConfigError("discretization needs a bounded support box")
        if self.lower.shape != self.upper.shape or np.any(self.upper <= self.lower):
            raise ConfigError("density box must have upper > lower in every coordinate")
        self.d = self.lower.size
        self.density = density
        self.atoms = atoms
        if atoms is not None and atoms.size:
            if atoms.d != self.d:
                raise ConfigError(f"atoms live in dimension {atoms.d}, box in {self.d}")
            if np.any(atoms.points < self.lower) or np.any(atoms.points > self.upper):
                raise ConfigError("atoms must lie inside the density box")
        self.label = label

    @classmethod
    def lebesgue(cls, lower, upper) -> "DensityMeasure":
        return cls(lower, upper, lambda p: np.ones(p.shape[0]), label="lebesgue")

    def _cube_integrals(self, corners: np.ndarray, side: float, absolute: bool, order: int) -> np.ndarray:
        if self.density is None:
            return np.zeros(corners.shape[0])
        lo = np.maximum(corners, self.lower)
        hi = np.minimum(corners + side, self.upper)
        width = np.clip(hi - lo, 0.0, None)
        x, w = np.polynomial.legendre.leggauss(order)
        x = 0.5 * (x + 1.0)
        w = 0.5 * w
        grid = np.array(list(itertools.product(x, repeat=self.d)))
        gw = np.prod(np.array(list(itertools.product(w, repeat=self.d))), axis=1)
        nodes = lo[:, None, :] + grid[None, :, :] * width[:, None, :]
        values = np.asarray(self.density(nodes.reshape(-1, self.d)), dtype=float).reshape(corners.shape[0], -1)
        if absolute:
            values = np.abs(values)
        return values @ gw * np.prod(width, axis=1)

    def _mesh(self, mesh: float):
        counts = np.ceil((self.upper - self.lower) / mesh - 1e-12).astype(int)
        counts = np.maximum(counts, 1)
        idx = np.array(list(itertools.product(*[range(c) for c in counts])), dtype=float)
        return self.lower + idx * mesh, counts

    def total_variation(self, mesh: Optional[float] = None, order: int = CUBE_GAUSS_ORDER) -> float:
        """||nu||, the density part integrated on a fine mesh."""
        mesh = mesh or float(np.min(self.upper - self.lower)) / 64
        corners, _ = self._mesh(mesh)
        value = math.fsum(self._cube_integrals(corners, mesh, True, order))
        if self.atoms is not None:
            value += self.atoms.total_variation
        return value


def discretize_measure(
    density: DensityMeasure, mesh: float, order: int = CUBE_GAUSS_ORDER
) -> DiscreteMeasure:
    """
    Place each mesh cube's charge at its center.

    Args:
        density: Measure description on a bounded box
        mesh: Edge of the mesh cubes, anchored at the box's lower corner
        order: Gauss-Legendre points per axis and cube

    Returns:
        DiscreteMeasure with one atom per cube of nonzero charge
    """
    if not mesh > 0:
        raise ConfigError(f"mesh must be positive, got {mesh}")
    corners, counts = density._mesh(mesh)
    charge = density._cube_integrals(corners, mesh, False, order)
    if density.atoms is not None and density.atoms.size:
        cell = np.floor((density.atoms.points - density.lower) / mesh).astype(int)
        cell = np.minimum(cell, counts - 1)
        flat = np.ravel_multi_index(tuple(cell.T), tuple(counts))
        np.add.at(charge, flat, density.atoms.weights)
    return DiscreteMeasure(corners + 0.5 * mesh, charge, density.d, merge_tol=0.0, label=f"mesh:{mesh:g}")


def growth_constant(mu, s: float, points=None, radii=None) -> float:
    """Sampled sup of mu(B(x, r)) / r^s; dividing mu by it puts mu in the growth class of order s."""
    points = mu.support_sample() if points is None else _as_points(points, mu.d)
    if radii is None:
        diam = max(mu.diameter(), 1e-12)
        radii = np.geomspace(diam * 1e-4, diam * 2, 64)
    best = 0.0
    for x in points:
        profile = mu.ball_mass_profile(x, radii)
        best = max(best, float(np.max(profile / np.asarray(radii) ** s)))
    return best


Measure = Union[DiscreteMeasure, CubeMeasure]


def measure_from_json(data) -> Measure:
    """
    Read a measure from its exchange format.

    A list of ``{"x", "w"}`` atoms gives a DiscreteMeasure; a Cantor spec
    ``{"d", "s", "ell", "lambda"}`` builds a CantorMeasure; ``{"lebesgue":
    {"corner", "side"}}`` is the Lebesgue measure on one cube.
    """
    if isinstance(data, list):
        return DiscreteMeasure.from_json(data)
    if isinstance(data, dict) and "ell" in data:
        try:
            spec = CantorSpec.model_validate(data)
        except ValidationError as exc:
            err = exc.errors()[0]
            raise ConfigError(f"cantor spec {'.'.join(map(str, err['loc']))}: {err['msg']}") from exc
        if "s" not in data:
            raise ConfigError("cantor spec needs the field 's'")
        return build_cantor(spec, float(data["s"]))
    if isinstance(data, dict) and "lebesgue" in data:
        cube = data["lebesgue"]
        return CubeMeasure.lebesgue(cube["corner"], float(cube["side"]))
    raise ConfigError("unrecognized measure description")
