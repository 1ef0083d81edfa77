"""
Experiment Service

End-to-end experiments: content of the maximal-transform superlevel set
against the critical size M_h (upper estimate), the randomized corner
construction with its Monte Carlo lower estimate, the s >= d bound and the
bounded regime N -> inf.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from app.config import BOOTSTRAP_SAMPLES, TRIAL_WORKERS
from app.exceptions import ConfigError, ConstructionError
from app.models.experiment_schema import (
    CartanLowerResult,
    CartanUpperRecord,
    ExperimentConfig,
    LargeSRecord,
    LevelStat,
    TrendReport,
    WindowSpec,
)
from app.services.content_service import DyadicCellSet, content_bracket, covering_upper_bound, superlevel_cells
from app.services.gauge_service import GaugeFunction, gauge_from_spec
from app.services.measure_service import DiscreteMeasure, corner_offsets
from app.services.mh_service import mh
from app.services.riesz_service import RieszContext, compensated_sum, truncated_transform_many
from app.services.trial_service import AUX_STREAM, TrialWorker, trial_rng

logger = logging.getLogger(__name__)

MAX_DEPTH = 20
# window margin beyond the radius (||nu||/P)^{1/s} that contains the superlevel set
WINDOW_MARGIN = 1.05


class RandomCantorRealization:
    """
    One draw of the randomized corner construction.

    Attributes:
        ell: Edge lengths ell_0..ell_n
        J: Selected levels j_0 = 0 < ... < j_m = n
        shifts: Per level k, the (instances, 2^d, d) array of v_eps in [-1/20, 1/20]^d
        positions: Per level k = 0..m, centers of the E_k instances
        base_centers: Centers of the 2^{nd} base cubes (edge ell_n)
        block: (2^{nd}, m) index of the E_k instance holding each base cube
        corner: (2^{nd}, m) index of the F_k copy (sign vector eps) holding it
        nu: eta 2^{-nd} at every base center
        mu: 2^{-nd} at every base center
        theta: eta 2^{-j_k d} / ell_{j_k}^s for k < m
    """

    def __init__(self, M, eta, ell, J, shifts, positions, block, corner, s, d):
        self.M = M
        self.eta = eta
        self.ell = ell
        self.J = J
        self.shifts = shifts
        self.positions = positions
        self.block = block
        self.corner = corner
        self.s = s
        self.d = d
        self.base_centers = positions[-1]
        count = self.base_centers.shape[0]
        self.nu = DiscreteMeasure(self.base_centers, eta / count, d, merge_tol=0.0, label="random-cantor:nu")
        self.mu = DiscreteMeasure(self.base_centers, 1.0 / count, d, merge_tol=0.0, label="random-cantor:mu")
        self.theta = np.array([eta * 2.0 ** (-j * d) / ell[j] ** s for j in J[:-1]])

    @property
    def n(self) -> int:
        return self.ell.size - 1

    @property
    def m(self) -> int:
        return len(self.J) - 1

    @property
    def base_side(self) -> float:
        return float(self.ell[-1])

    def opposite_block(self, index: int, k: int) -> np.ndarray:
        """Mask of base cubes in the F_k copy opposite (in every coordinate) to the one holding ``index``."""
        flip = 2 ** self.d - 1 - self.corner[index, k]
        return (self.block[:, k] == self.block[index, k]) & (self.corner[:, k] == flip)

    def __repr__(self) -> str:
        return f"RandomCantorRealization(d={self.d}, n={self.n}, J={self.J})"


def cantor_lengths(h: GaugeFunction, M: float, n: int) -> np.ndarray:
    """ell_j = h^{-1}(2^{-dj} M) for j < n and ell_n = h^{-1}(2^{-dn} M) / 5."""
    d = h.d
    ell = np.array([float(h.inverse(2.0 ** (-d * j) * M)) for j in range(n + 1)])
    ell[n] /= 5.0
    return ell


def select_levels(ell: np.ndarray) -> List[int]:
    """J: from j, the least k > j with ell_k <= 2^{j-k} ell_j / 5."""
    n = ell.size - 1
    J = [0]
    while J[-1] < n:
        j = J[-1]
        nxt = next((k for k in range(j + 1, n + 1) if ell[k] <= 0.2 * 2.0 ** (j - k) * ell[j] * (1 + 1e-12)), None)
        if nxt is None:
            raise ConstructionError(f"level selection stalls at j={j}: lengths do not shrink by 2^(j-k)/5")
        J.append(nxt)
    return J


def random_cantor_build(
    h: GaugeFunction, ctx: RieszContext, M: float, n: int, eta: float, seed
) -> RandomCantorRealization:
    """
    Build E_m -> E_0 top-down from the cube at the origin.

    E_k places 2^d copies of F_k at (ell_{j_k}/5)(eps + v_eps); F_k places
    D_k = 2^{d(j_{k+1} - j_k - 1)} copies of E_{k+1} at the subcube centers of
    the cube of edge ell_{j_k}/5. Every copy draws its own shifts.

    Args:
        seed: Integer seed or a numpy Generator
    """
    if n < 1:
        raise ConfigError(f"construction depth n must be >= 1, got {n}")
    if not (M > 0 and eta > 0):
        raise ConfigError(f"M and eta must be positive, got M={M}, eta={eta}")
    if h.d != ctx.d:
        raise ConfigError(f"gauge dimension {h.d} differs from context dimension {ctx.d}")
    rng = seed if isinstance(seed, np.random.Generator) else trial_rng(int(seed), 0)
    d = ctx.d
    ell = cantor_lengths(h, M, n)
    J = select_levels(ell)
    signs = 2.0 * corner_offsets(d) - 1.0
    positions = [np.zeros((1, d))]
    shifts, parents, corners = [], [], []
    for k in range(len(J) - 1):
        L = ell[J[k]]
        current = positions[-1]
        count = current.shape[0]
        v = rng.uniform(-0.05, 0.05, size=(count, 2 ** d, d))
        blocks = current[:, None, :] + 0.2 * L * (signs[None, :, :] + v)
        q = 2 ** (J[k + 1] - J[k] - 1)
        sub = 0.2 * L / q
        axis = -0.1 * L + sub * (np.arange(q) + 0.5)
        grid = np.stack(np.meshgrid(*[axis] * d, indexing="ij"), axis=-1).reshape(-1, d)
        nxt = (blocks[:, :, None, :] + grid[None, None, :, :]).reshape(-1, d)
        shifts.append(v)
        parents.append(np.repeat(np.arange(count), 2 ** d * grid.shape[0]))
        corners.append(np.tile(np.repeat(np.arange(2 ** d), grid.shape[0]), count))
        positions.append(nxt)
    m = len(J) - 1
    total = positions[-1].shape[0]
    block = np.zeros((total, m), dtype=np.int64)
    corner = np.zeros((total, m), dtype=np.int64)
    idx = np.arange(total)
    for k in range(m - 1, -1, -1):
        block[:, k] = parents[k][idx]
        corner[:, k] = corners[k][idx]
        idx = block[:, k]
    logger.debug("random_cantor_build: n=%d J=%s base cubes=%d", n, J, total)
    return RandomCantorRealization(M, eta, ell, J, shifts, positions, block, corner, ctx.s, d)


def check_realization(real: RandomCantorRealization, tol: float = 1e-9) -> Dict[str, float]:
    """
    Assert the geometric invariants of a realization; ConstructionError on the first failure.

    Checks the level rule, the chain inequalities, the shift ranges, the
    containment of every E_k copy in its cube of edge ell_{j_k} and the
    ell_{j_k}/10 separation of the 2^d copies of F_k.
    """
    ell, J, d = real.ell, real.J, real.d
    if J != select_levels(ell) or J[0] != 0 or J[-1] != real.n:
        raise ConstructionError(f"level set {J} does not follow the selection rule")
    for k in range(real.m):
        a, b = J[k], J[k + 1]
        for j in range(a, b - 1):
            if ell[j] < 2 * ell[j + 1] * (1 - tol):
                raise ConstructionError(f"chain inequality ell_{j} >= 2 ell_{j + 1} fails")
        if 2.0 ** (b - a - 1) * ell[b - 1] < 0.2 * ell[a] * (1 - tol):
            raise ConstructionError(f"chain inequality at level {k} fails on the left")
        if 0.2 * ell[a] < 2.0 ** (b - a) * ell[b] * (1 - tol):
            raise ConstructionError(f"chain inequality at level {k} fails on the right")
    for k, v in enumerate(real.shifts):
        if np.any(np.abs(v) > 0.05 + tol):
            raise ConstructionError(f"shift at level {k} leaves the cube of edge 1/10")
    if real.base_centers.shape[0] != 2 ** (real.n * d):
        raise ConstructionError("wrong number of base cubes")
    half_base = 0.5 * real.base_side
    min_gap = math.inf
    for k in range(real.m):
        L = ell[J[k]]
        owner = real.positions[k][real.block[:, k]]
        reach = np.max(np.abs(real.base_centers - owner), axis=1) + half_base
        if np.any(reach > 0.5 * L * (1 + tol)):
            raise ConstructionError(f"an E_{k} copy leaves its cube of edge ell_{J[k]}")
        groups = real.block[:, k] * 2 ** d + real.corner[:, k]
        size = real.positions[k].shape[0] * 2 ** d
        lo = np.full((size, d), np.inf)
        hi = np.full((size, d), -np.inf)
        np.minimum.at(lo, groups, real.base_centers - half_base)
        np.maximum.at(hi, groups, real.base_centers + half_base)
        lo = lo.reshape(-1, 2 ** d, d)
        hi = hi.reshape(-1, 2 ** d, d)
        gap = np.maximum(lo[:, None, :, :] - hi[:, :, None, :], lo[:, :, None, :] - hi[:, None, :, :]).max(axis=3)
        off = ~np.eye(2 ** d, dtype=bool)
        level_gap = float(gap[:, off].min()) if off.any() else math.inf
        if level_gap < 0.1 * L * (1 - tol):
            raise ConstructionError(f"copies of F_{k} are closer than ell_{J[k]}/10")
        min_gap = min(min_gap, level_gap / L)
    return {"levels": float(real.m), "base_cubes": float(real.base_centers.shape[0]), "min_relative_gap": min_gap}


def level_statistics(xi: np.ndarray, theta: np.ndarray, J: Sequence[int]) -> List[LevelStat]:
    """max |xi_k| and the total variance of xi_k over trials, each against theta_k."""
    out = []
    for k in range(theta.size):
        sample = xi[:, k, :]
        max_abs = float(np.linalg.norm(sample, axis=1).max())
        variance = float(sample.var(axis=0, ddof=1).sum()) if sample.shape[0] > 1 else 0.0
        out.append(
            LevelStat(
                k=k,
                j_k=J[k],
                theta=float(theta[k]),
                max_abs=max_abs,
                variance=variance,
                max_ratio=max_abs / theta[k],
                var_ratio=variance / theta[k] ** 2,
            )
        )
    return out


def mass_fractions(scores: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """Per trial, the share of base cubes with score >= delta, for every delta."""
    ordered = np.sort(scores, axis=1)
    count = scores.shape[1]
    return np.stack([1.0 - np.searchsorted(row, deltas, side="left") / count for row in ordered])


def delta_star_estimate(fractions: np.ndarray, deltas: np.ndarray, quantile: float = 0.5) -> float:
    """Largest delta whose trial quantile of mass fractions is >= delta (0 when none)."""
    level = np.quantile(fractions, 1.0 - quantile, axis=0)
    ok = np.flatnonzero(level >= deltas)
    return float(deltas[ok[-1]]) if ok.size else 0.0


def bootstrap_interval(
    fractions: np.ndarray, deltas: np.ndarray, quantile: float, rng: np.random.Generator, samples: int = BOOTSTRAP_SAMPLES
) -> Tuple[float, float]:
    """2.5% and 97.5% percentiles of delta_star over trial resamples."""
    T = fractions.shape[0]
    values = [delta_star_estimate(fractions[rng.integers(0, T, T)], deltas, quantile) for _ in range(samples)]
    low, high = np.percentile(values, [2.5, 97.5])
    return float(low), float(high)


def _lower_trial(payload, rng: np.random.Generator):
    spec, s, d, M, n, eta, probe = payload
    h = gauge_from_spec(spec, d)
    ctx = RieszContext(s, d)
    real = random_cantor_build(h, ctx, M, n, eta, rng)
    check_realization(real)
    theta_norm = math.sqrt(float(np.sum(real.theta ** 2)))
    # eps = 0 drops only the atom sitting at each center
    values = truncated_transform_many(real.nu, ctx, real.base_centers, 0.0)
    scores = np.linalg.norm(values, axis=1) / theta_norm
    x = real.base_centers[probe]
    xi = np.zeros((real.m, d))
    for k in range(real.m):
        mask = real.opposite_block(probe, k)
        xi[k] = compensated_sum(ctx.kernel(real.base_centers[mask] - x)[None])[0] * (eta / real.base_centers.shape[0])
    return scores, xi


def _root_window(real: RandomCantorRealization) -> Tuple[np.ndarray, float]:
    L = float(real.ell[0])
    return np.full(real.d, -0.5 * L), L


def cartan_lower_experiment(cfg: ExperimentConfig, workers: int = TRIAL_WORKERS) -> CartanLowerResult:
    """
    Monte Carlo lower estimate on the randomized construction.

    Per trial, R_nu is evaluated at every base center (own atom excluded) and
    scored against (sum theta_k^2)^{1/2}; delta_star is the largest grid delta
    with quantile(share of base cubes scoring >= delta) >= delta, with a
    bootstrap interval over trials. The content of the selected set G is
    bracketed on the median trial.
    """
    h = gauge_from_spec(cfg.gauge, cfg.d)
    ctx = RieszContext(cfg.s, cfg.d)
    payload = (cfg.gauge, cfg.s, cfg.d, cfg.M, cfg.n, cfg.eta, 0)
    results = TrialWorker(_lower_trial, cfg.seed, workers).run(payload, cfg.trials)
    scores = np.stack([r[0] for r in results])
    xi = np.stack([r[1] for r in results])
    reference = random_cantor_build(h, ctx, cfg.M, cfg.n, cfg.eta, trial_rng(cfg.seed, 0))
    theta_norm = math.sqrt(float(np.sum(reference.theta ** 2)))
    stats_k = level_statistics(xi, reference.theta, reference.J)
    if reference.m == 1:
        logger.warning("level selection took a single step J=%s; the lower bound is weak", reference.J)
    if cfg.trials > 1 and any(stat.variance == 0 for stat in stats_k):
        raise ConstructionError("a level potential has zero variance; the shifts are not random")
    deltas = np.arange(1, cfg.delta_grid + 1) / cfg.delta_grid
    fractions = mass_fractions(scores, deltas)
    delta_star = delta_star_estimate(fractions, deltas, cfg.quantile)
    ci_low, ci_high = bootstrap_interval(fractions, deltas, cfg.quantile, trial_rng(cfg.seed, AUX_STREAM))
    content_lower = content_upper = 0.0
    if delta_star > 0:
        column = int(round(delta_star * cfg.delta_grid)) - 1
        median_trial = int(np.argsort(fractions[:, column], kind="stable")[cfg.trials // 2])
        real = random_cantor_build(h, ctx, cfg.M, cfg.n, cfg.eta, trial_rng(cfg.seed, median_trial))
        selected = real.base_centers[scores[median_trial] >= delta_star]
        corner, side = _root_window(real)
        cells = DyadicCellSet.from_points(selected, corner, side, cfg.depth)
        if cells.count:
            bracket = content_bracket(cells, h)
            content_lower, content_upper = bracket.lower, bracket.upper
    logger.info(
        "cartan_lower: delta_star=%.4f [%.4f, %.4f], m=%d, content in [%.4g, %.4g]",
        delta_star, ci_low, ci_high, reference.m, content_lower, content_upper,
    )
    return CartanLowerResult(
        delta_star=delta_star,
        ci_low=ci_low,
        ci_high=ci_high,
        content_lower=content_lower,
        content_upper=content_upper,
        theta_norm=theta_norm,
        m=reference.m,
        J=reference.J,
        trials=cfg.trials,
        level_stats=stats_k,
    )


def one_point_content(h: GaugeFunction, ctx: RieszContext, eta: float, P: float, depth: int = 10) -> Dict[str, float]:
    """
    All mass eta at the origin: Z(nu, P) is the ball of radius (eta/P)^{1/s} with content h(radius).

    Returns the exact value and the dyadic bracket at the given depth.
    """
    radius = (eta / P) ** (1.0 / ctx.s)
    nu = DiscreteMeasure(np.zeros((1, ctx.d)), [eta], ctx.d)
    window = WindowSpec(corner=[-2.0 * radius] * ctx.d, side=4.0 * radius)
    cells = superlevel_cells(nu, ctx, P, window, depth, mode="maximal")
    bracket = content_bracket(cells, h)
    return {"radius": radius, "exact": float(h(radius)), "upper": bracket.upper, "lower": bracket.lower}


def _family_measure(family: str, N: int, cfg: ExperimentConfig, h: GaugeFunction, ctx: RieszContext, rng):
    """Random nu of one family and the number of atoms it stands for."""
    d = cfg.d
    if family == "uniform":
        weights = rng.uniform(0.5, 1.5, N) * rng.choice([-1.0, 1.0], N)
        return DiscreteMeasure(rng.random((N, d)), weights, d, label=f"uniform:{N}"), N
    if family == "clustered":
        hubs = rng.random((min(3, N), d))
        points = hubs[rng.integers(0, hubs.shape[0], N)] + 0.02 * rng.standard_normal((N, d))
        weights = rng.uniform(0.5, 1.5, N) * rng.choice([-1.0, 1.0], N)
        return DiscreteMeasure(points, weights, d, label=f"clustered:{N}"), N
    if family == "cantor":
        n = max(1, math.ceil(math.log2(max(N, 2)) / d))
        real = random_cantor_build(h, ctx, cfg.M, n, cfg.eta, rng)
        return real.nu, real.nu.size
    if family == "separated":
        points = np.zeros((N, d))
        points[:, 0] = cfg.separation * np.arange(N)
        return DiscreteMeasure(points, cfg.eta, d, label=f"separated:{N}"), N
    if family == "one_point":
        return DiscreteMeasure(np.zeros((N, d)), cfg.eta / N, d, label=f"one_point:{N}"), N
    raise ConfigError(f"unknown measure family '{family}'")


def _reach(nu: DiscreteMeasure, s: float, P: float) -> float:
    """(||nu|| / P)^{1/s}: every superlevel point lies this close to an atom."""
    return (nu.total_variation / P) ** (1.0 / s)


def _default_window(points: np.ndarray, reach: float) -> WindowSpec:
    lo = points.min(axis=0) - reach
    hi = points.max(axis=0) + reach
    center = 0.5 * (lo + hi)
    side = WINDOW_MARGIN * float(np.max(hi - lo))
    return WindowSpec(corner=list(center - 0.5 * side), side=side)


def _enlarged(window: WindowSpec) -> WindowSpec:
    corner = np.asarray(window.corner, dtype=float)
    center = corner + 0.5 * window.side
    return WindowSpec(corner=list(center - window.side), side=2.0 * window.side)


def superlevel_content(
    nu: DiscreteMeasure,
    ctx: RieszContext,
    h: GaugeFunction,
    P: float,
    depth: int,
    window: Optional[WindowSpec] = None,
    local: bool = False,
) -> Tuple[float, int, bool, bool]:
    """
    Covering cost of the maximal superlevel set.

    ``local`` covers each atom by its own window (for far-separated atoms) and
    adds the costs. A window whose boundary cells are marked is doubled once
    at depth + 1; a second hit raises the flag.

    Returns:
        (content_upper, cells, retried, flagged)
    """
    reach = _reach(nu, ctx.s, P)
    if local:
        total, count, retried, flagged = 0.0, 0, False, False
        for point in nu.points:
            part = superlevel_content(nu, ctx, h, P, depth, _default_window(point[None, :], reach))
            total += part[0]
            count += part[1]
            retried |= part[2]
            flagged |= part[3]
        return total, count, retried, flagged
    window = window or _default_window(nu.points, reach)
    cells = superlevel_cells(nu, ctx, P, window, depth, mode="maximal")
    retried = flagged = False
    if cells.touches_boundary():
        retried = True
        depth = min(depth + 1, MAX_DEPTH)
        cells = superlevel_cells(nu, ctx, P, _enlarged(window), depth, mode="maximal")
        if cells.touches_boundary():
            flagged = True
            logger.warning("superlevel set still touches the enlarged window (P=%g)", P)
    return covering_upper_bound(cells, h), cells.count, retried, flagged


def _family_trial(cfg: ExperimentConfig, family_index: int, config_index: int) -> np.random.Generator:
    return trial_rng(cfg.seed, family_index * cfg.configurations + config_index)


def cartan_upper_experiment(cfg: ExperimentConfig) -> List[CartanUpperRecord]:
    """
    Ratio of the superlevel content of R_{nu,*} to M_h(||nu||/P, N) per family, configuration and P.
    """
    ctx = RieszContext(cfg.s, cfg.d)
    ctx.require_subcritical()
    h = gauge_from_spec(cfg.gauge, cfg.d)
    records = []
    for fi, family in enumerate(cfg.families):
        for ci in range(cfg.configurations):
            rng = _family_trial(cfg, fi, ci)
            nu, N = _family_measure(family, cfg.N, cfg, h, ctx, rng)
            for P in cfg.P_grid:
                content, cells, retried, flagged = superlevel_content(
                    nu, ctx, h, P, cfg.depth, cfg.window, local=family == "separated"
                )
                kappa = nu.total_variation / P
                bound = mh(h, cfg.s, kappa, max(N, 2))
                records.append(
                    CartanUpperRecord(
                        family=family,
                        config_index=ci,
                        N=N,
                        P=P,
                        norm_nu=nu.total_variation,
                        content_upper=content,
                        mh=bound,
                        ratio=content / bound,
                        cells=cells,
                        retried=retried,
                        flagged=flagged,
                    )
                )
    if records:
        logger.info("cartan_upper: max ratio %.4g over %d records", max(r.ratio for r in records), len(records))
    return records


def fit_log_trend(x: Sequence[float], y: Sequence[float]) -> TrendReport:
    """Least-squares fit of log y against log x."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    if lx.size < 2:
        raise ConfigError("a trend needs at least two points")
    fit = stats.linregress(lx, ly)
    stderr = float(fit.stderr) if lx.size > 2 and math.isfinite(fit.stderr) else 0.0
    return TrendReport(slope=float(fit.slope), stderr=stderr, intercept=float(fit.intercept), points=int(lx.size))


def bounded_regime_trend(cfg: ExperimentConfig) -> Tuple[List[CartanUpperRecord], TrendReport]:
    """
    Superlevel content against M_h(||nu||/P, inf) as N grows (uniform family).

    For a gauge with a finite integral at 0 the ratio stays bounded; the
    report fits log(mean ratio) against log N.
    """
    ctx = RieszContext(cfg.s, cfg.d)
    ctx.require_subcritical()
    h = gauge_from_spec(cfg.gauge, cfg.d)
    grid = cfg.N_grid or [4, 16, 64, 256]
    P = cfg.P_grid[0]
    records, means = [], []
    for gi, N in enumerate(grid):
        ratios = []
        for ci in range(cfg.configurations):
            rng = trial_rng(cfg.seed, gi * cfg.configurations + ci)
            nu, _ = _family_measure("uniform", N, cfg, h, ctx, rng)
            content, cells, retried, flagged = superlevel_content(nu, ctx, h, P, cfg.depth, cfg.window)
            bound = mh(h, cfg.s, nu.total_variation / P, math.inf)
            ratios.append(content / bound)
            records.append(
                CartanUpperRecord(
                    family="uniform",
                    config_index=ci,
                    N=N,
                    P=P,
                    norm_nu=nu.total_variation,
                    content_upper=content,
                    mh=bound,
                    ratio=content / bound,
                    cells=cells,
                    retried=retried,
                    flagged=flagged,
                )
            )
        means.append(float(np.mean(ratios)))
    trend = fit_log_trend(grid, means)
    logger.info("bounded regime: slope %.4f +- %.4f", trend.slope, trend.stderr)
    return records, trend


def large_s_bound(h: GaugeFunction, norm: float, P: float, N: int, s: float) -> float:
    """N h((||nu|| / (P N))^{1/s})."""
    return N * float(h((norm / (P * N)) ** (1.0 / s)))


def large_s_experiment(cfg: ExperimentConfig) -> List[LargeSRecord]:
    """Superlevel content against N h((||nu||/(PN))^{1/s}) for s >= d."""
    if cfg.s < cfg.d:
        raise ConfigError(f"large_s_experiment needs s >= d, got s={cfg.s}, d={cfg.d}")
    ctx = RieszContext(cfg.s, cfg.d)
    h = gauge_from_spec(cfg.gauge, cfg.d)
    records = []
    for fi, family in enumerate(cfg.families):
        for gi, N in enumerate(cfg.N_grid or [cfg.N]):
            for ci in range(cfg.configurations):
                rng = trial_rng(cfg.seed, (fi * 64 + gi) * cfg.configurations + ci)
                nu, count = _family_measure(family, N, cfg, h, ctx, rng)
                for P in cfg.P_grid:
                    content, cells, _, flagged = superlevel_content(
                        nu, ctx, h, P, cfg.depth, cfg.window, local=family == "separated"
                    )
                    bound = large_s_bound(h, nu.total_variation, P, count, cfg.s)
                    records.append(
                        LargeSRecord(
                            family=family,
                            N=count,
                            P=P,
                            norm_nu=nu.total_variation,
                            content_upper=content,
                            bound=bound,
                            ratio=content / bound,
                            cells=cells,
                            flagged=flagged,
                        )
                    )
    return records
