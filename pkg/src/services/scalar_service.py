"""
Layanan Skalar - Minimisasi pointwise gamma_o(mu, beta)
Closed form untuk kamus linear dan kamus jenuh (hard saturation),
plus fallback generik: scan grid kasar lalu golden-section.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from core.problem import ComplexVec, PointwiseSet
from utils.constants import (
    EXTENT_GRID_POINTS, EXTENT_MAX_RADIUS, GENERIC_GRID_POINTS, GENERIC_REFINE_TOL, GOLDEN_MAX_ITER,
    SEARCH_RADIUS_FACTOR, SEARCH_RADIUS_MIN,
)
from utils.errors import IllPosedProblemError

INV_PHI = (math.sqrt(5) - 1) / 2          # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2   # 1 / phi^2


@dataclass(frozen=True)
class ScalarResult:
    """Minimizer x* dan nilai minimum (gamma_o)."""
    x_star: float
    value: float


def hard_saturation(v, r: float):
    """rho(v): identitas di [-r, r], di-clip ke +-r di luar."""
    return np.clip(v, -r, r)


# =============================================================================
# Kamus linear: x^2 + c*x
# =============================================================================

def solve_quadratic_linear(mu: ComplexVec, h: ComplexVec, bound: PointwiseSet) -> ScalarResult:
    """
    Minimalkan x^2 + Re[mu^H h]*x atas P.

    Args:
        mu: Dual multiplier
        h: Dictionary vector at this beta (F(x, beta) = x*h)
        bound: Pointwise set (clip to [-Gamma, Gamma] when bounded)

    Returns:
        ScalarResult with the clipped stationary point
    """
    x, value = solve_quadratic_linear_batch(np.array([mu.inner(h)]), bound.limit)
    return ScalarResult(float(x[0]), float(value[0]))


def solve_quadratic_linear_batch(c: np.ndarray, gamma: float = math.inf) -> Tuple[np.ndarray, np.ndarray]:
    """Versi vektor: c = Re[mu^H h] per baris."""
    c = np.asarray(c, dtype=float)
    x = np.clip(-0.5 * c, -gamma, gamma)
    return x, x * x + c * x


# =============================================================================
# Kamus jenuh: x^2 + sum_i w_i * rho(x * h_i)
# =============================================================================

def solve_saturated_cosine(mu, h, r: float, bound: Optional[PointwiseSet] = None) -> ScalarResult:
    """
    Minimalkan x^2 + mu^T rho[x*h] secara eksak.

    Untuk x >= 0 sumbu dipotong di knot r/|h_i| (urut naik = |h| turun).
    Di tiap interval objektifnya kuadrat x^2 + a_j x + c_j, jadi cukup
    clip titik stasioner ke interval. Cabang x <= 0 simetris dengan c_j
    berganti tanda.

    Args:
        mu: Real weights (ComplexVec real part is used when given)
        h: Real vector of length p
        r: Saturation level (may be inf)
        bound: Optional magnitude bound on x

    Returns:
        ScalarResult of the global minimum
    """
    weights = mu.re if isinstance(mu, ComplexVec) else np.asarray(mu, dtype=float)
    gamma = bound.limit if bound is not None else math.inf
    x, value = solve_saturated_cosine_batch(weights[None, :], np.asarray(h, dtype=float)[None, :], r, gamma)
    return ScalarResult(float(x[0]), float(value[0]))


def solve_saturated_cosine_batch(weights: np.ndarray, h: np.ndarray, r: float,
                                 gamma: float = math.inf) -> Tuple[np.ndarray, np.ndarray]:
    """
    Versi vektor atas N baris sekaligus.

    Args:
        weights: (N, p) or (p,) weights w_i
        h: (N, p) per-row vectors h_i
        r: Saturation level
        gamma: Magnitude bound on x (inf = unbounded)

    Returns:
        (x_star, value) arrays of length N
    """
    h = np.atleast_2d(np.asarray(h, dtype=float))
    weights = np.broadcast_to(np.asarray(weights, dtype=float), h.shape)
    n_rows, p = h.shape

    abs_h = np.abs(h)
    with np.errstate(divide="ignore", invalid="ignore"):
        knots = np.where(abs_h > 0, r / abs_h, np.inf)

    order = np.argsort(knots, axis=1, kind="stable")
    knots = np.take_along_axis(knots, order, axis=1)
    w_sorted = np.take_along_axis(weights, order, axis=1)
    h_sorted = np.take_along_axis(h, order, axis=1)

    lin = w_sorted * h_sorted
    finite = np.isfinite(knots)
    sat_const = np.where(finite, w_sorted * np.where(finite, r, 0.0) * np.sign(h_sorted), 0.0)

    zero_col = np.zeros((n_rows, 1))
    cum_lin = np.concatenate([zero_col, np.cumsum(lin, axis=1)], axis=1)        # (N, p+1)
    slope = cum_lin[:, -1:] - cum_lin                                           # a_j
    const = np.concatenate([zero_col, np.cumsum(sat_const, axis=1)], axis=1)    # c_j

    lo = np.concatenate([zero_col, knots], axis=1)
    hi = np.concatenate([knots, np.full((n_rows, 1), np.inf)], axis=1)
    hi = np.minimum(hi, gamma)
    valid = np.isfinite(lo) & (lo <= hi)

    lo_safe = np.where(valid, lo, 0.0)
    hi_safe = np.where(valid, hi, 0.0)

    # Cabang positif: x di [lo, hi]
    x_pos = np.clip(-0.5 * slope, lo_safe, hi_safe)
    v_pos = x_pos * x_pos + slope * x_pos + const
    # Cabang negatif: x di [-hi, -lo]
    x_neg = np.clip(-0.5 * slope, -hi_safe, -lo_safe)
    v_neg = x_neg * x_neg + slope * x_neg - const

    v_pos = np.where(valid, v_pos, np.inf)
    v_neg = np.where(valid, v_neg, np.inf)

    candidates_x = np.concatenate([x_pos, x_neg], axis=1)
    candidates_v = np.concatenate([v_pos, v_neg], axis=1)
    best = np.argmin(candidates_v, axis=1)
    rows = np.arange(n_rows)
    return candidates_x[rows, best], candidates_v[rows, best]


# =============================================================================
# Fallback generik
# =============================================================================

def golden_section(f: Callable[[float], float], a: float, b: float,
                   tol: float = GENERIC_REFINE_TOL, max_iter: int = GOLDEN_MAX_ITER) -> ScalarResult:
    """
    Golden-section search pada [a, b], mengasumsikan unimodal di dalam bracket.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return ScalarResult(x, f(x))

    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    n = min(n, max_iter)

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)

    for _ in range(n - 1):
        if yc < yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)

    if yc < yd:
        return ScalarResult(c, yc)
    return ScalarResult(d, yd)


def _scan(objective: Callable[[float], float], grid: np.ndarray) -> np.ndarray:
    values = np.empty(grid.size)
    for k, x in enumerate(grid):
        v = objective(float(x))
        if not np.isfinite(v):
            raise IllPosedProblemError(float(x), float(v))
        values[k] = v
    return values


def stationary_extent(objective: Callable[[float], float],
                      grid_points: int = EXTENT_GRID_POINTS,
                      max_radius: float = EXTENT_MAX_RADIUS) -> float:
    """
    Perkiraan |x| terbesar di antara titik stasioner objective.

    Grid [-R, R] diperlebar (R dikali dua) sampai objective naik ke luar di
    kedua ujung dan semua pergantian arah berada di separuh dalam grid.
    Bila tidak pernah naik sampai max_radius, yang dikembalikan max_radius.
    """
    radius = 1.0
    while True:
        grid = np.linspace(-radius, radius, max(int(grid_points) | 1, 3))
        slope = np.sign(np.diff(_scan(objective, grid)))
        turns = np.nonzero(slope[:-1] != slope[1:])[0] + 1
        extent = float(np.max(np.abs(grid[turns]))) if turns.size else 0.0
        rising = slope[0] < 0 and slope[-1] > 0
        if rising and extent <= 0.5 * radius:
            return extent
        if radius >= max_radius:
            return max_radius
        radius *= 2.0


def search_radius_for(objective: Callable[[float], float],
                      extent: Optional[float] = None) -> float:
    """Radius = SEARCH_RADIUS_FACTOR * |x| stasioner terbesar (dari hook atau scan)."""
    if extent is None:
        extent = stationary_extent(objective)
    return max(SEARCH_RADIUS_FACTOR * abs(float(extent)), SEARCH_RADIUS_MIN)


def solve_generic(objective: Callable[[float], float], pointwise_set: PointwiseSet,
                  search_radius: Optional[float] = None,
                  grid_points: int = GENERIC_GRID_POINTS,
                  refine_tol: float = GENERIC_REFINE_TOL) -> ScalarResult:
    """
    Scan grid seragam (selalu memuat 0) lalu golden-section di sekitar bracket terbaik.

    Args:
        objective: Scalar evaluator x -> value
        pointwise_set: Search over [-Gamma, Gamma] when bounded
        search_radius: Half-width of the search interval when unbounded
            (default: search_radius_for(objective), derived on every call)
        grid_points: Number of coarse samples
        refine_tol: Golden-section tolerance

    Returns:
        ScalarResult with value <= objective(0)
    """
    if search_radius is None and not pointwise_set.bounded:
        search_radius = search_radius_for(objective)
    lo, hi = pointwise_set.search_interval(search_radius)
    grid = np.union1d(np.linspace(lo, hi, max(int(grid_points), 3)), [0.0])
    values = _scan(objective, grid)

    k = int(np.argmin(values))
    best = ScalarResult(float(grid[k]), float(values[k]))

    left = grid[max(k - 1, 0)]
    right = grid[min(k + 1, grid.size - 1)]
    refined = golden_section(objective, float(left), float(right), tol=refine_tol)
    if not np.isfinite(refined.value):
        raise IllPosedProblemError(refined.x_star, refined.value)
    if refined.value < best.value:
        return refined
    return best
