"""
Layanan Dual - Evaluasi fungsi dual, supergradien, dan solver ascent
Fungsi dual d = d_X + d_z dihitung lewat thresholding pointwise:
beta masuk support iff gamma_o - gamma_0 + lambda < 0 (seri = di luar).
"""

import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import lsq_linear

from core.problem import (
    ComplexVec, DualPoint, DzResult, SfpProblem, intervals_measure, merge_intervals,
)
from services.quadrature_service import (
    McSampler, QuadratureScheme, build_composite, mc_nodes, rule_on_intervals,
)
from services.scalar_service import search_radius_for, solve_generic
from utils.constants import (
    ASCENT_DROP_FACTOR, BOUNDARY_TOL, DEFAULT_OUTPUT_GRID, EARLY_STOP_PATIENCE,
    MAX_BACKTRACKS, SCHEDULES, TIE_TOL_FACTOR, UNIQUENESS_PROBES,
)
from utils.errors import (
    DomainError, NoAcceptedIterateError, SaturationHypothesisError,
)
from utils.logger import get_logger

logger = get_logger(__name__)


# =============================================================================
# Result Types
# =============================================================================

@dataclass(frozen=True, eq=False)
class IntegrationPlan:
    """Node integrasi akhir (setelah refinement) dengan status support per node."""

    nodes: np.ndarray       # (M, dim)
    weights: np.ndarray     # (M,)
    inside: np.ndarray      # (M,) bool
    x: np.ndarray           # (M,) minimizer di dalam support, 0 di luar
    gamma_o: np.ndarray
    gamma_0: np.ndarray

    def d_x(self, lam: float) -> float:
        integrand = np.where(self.inside, lam + self.gamma_o, self.gamma_0)
        return float(np.dot(self.weights, integrand))


@dataclass(frozen=True, eq=False)
class DualEvaluation:
    """Hasil eval_dual pada satu titik dual."""

    value: float
    dz_value: float
    dz_minimizer: ComplexVec
    support: list
    support_measure: float
    delta: float
    in_domain: bool
    point: DualPoint
    dz: DzResult
    d_x: float = 0.0
    plan: Optional[IntegrationPlan] = None

    @property
    def l0(self) -> float:
        return self.support_measure


@dataclass(eq=False)
class PrimalSolution:
    """
    Fungsi sparse X* hasil recovery: evaluator pointwise (nol di luar support),
    daftar support, nilai objektif P, pengukuran z*, dan l0.
    """

    support: list
    objective_value: float
    measurements: ComplexVec
    l0: float
    aux: np.ndarray
    evaluator: Callable[[np.ndarray], np.ndarray]
    grid: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    constraint_values: Optional[np.ndarray] = None
    unique: bool = True

    def __call__(self, beta):
        """Evaluasi X* pada satu titik atau array titik."""
        betas = np.asarray(beta, dtype=float)
        scalar = betas.ndim == 0
        out = self.evaluator(np.atleast_1d(betas))
        return float(out[0]) if scalar else out


@dataclass(eq=False)
class SolveReport:
    """Jejak konvergensi satu run ascent."""

    dual_trace: List[float] = field(default_factory=list)
    eta_trace: List[float] = field(default_factory=list)
    support_trace: List[float] = field(default_factory=list)
    gap_trace: List[float] = field(default_factory=list)
    accepted_iterations: List[int] = field(default_factory=list)
    best_t: int = 0
    final_gap_estimate: float = math.nan
    delta_used: float = 0.0
    wall_iterations: int = 0
    backtrack_exhausted: bool = False
    early_stopped: bool = False
    rejected_steps: int = 0
    elapsed: float = 0.0

    @property
    def best_value(self) -> float:
        return self.dual_trace[self.best_t] if self.dual_trace else -math.inf

    @property
    def stalled(self) -> bool:
        """Ascent berjalan tetapi setiap iterate berikutnya lebih buruk dari titik awal."""
        if self.wall_iterations == 0 or self.early_stopped or len(self.dual_trace) < 2:
            return False
        d0 = self.dual_trace[0]
        return max(self.dual_trace[1:]) < d0 - 1e-12 * (1.0 + abs(d0))

    def best_so_far(self) -> np.ndarray:
        return np.maximum.accumulate(np.asarray(self.dual_trace, dtype=float))

    def rows(self):
        """Baris CSV: t, d_t, eta_t, support_measure, gap_estimate."""
        for t, d_t in enumerate(self.dual_trace):
            yield (t, d_t, self.eta_trace[t], self.support_trace[t], self.gap_trace[t])


# =============================================================================
# Closed-form d_z untuk constraint kuadrat
# =============================================================================

def dz_quadratic(y: ComplexVec, epsilon: float, mu: ComplexVec, nu: float) -> Tuple[ComplexVec, float]:
    """
    min_z nu*(||y - z||^2 - eps) - Re[mu^H z].

    Returns:
        (z, value); value = -inf is the unbounded-below sentinel (nu = 0, mu != 0)
    """
    nu = float(np.atleast_1d(nu)[0])
    if nu < 0:
        raise DomainError(f"nu must be nonnegative (got {nu})")
    if nu == 0.0:
        if mu.norm() == 0.0:
            return y, 0.0
        return y, -math.inf
    z = y + mu.scale(0.5 / nu)
    value = -mu.inner(mu) / (4.0 * nu) - nu * epsilon - mu.inner(y)
    return z, float(value)


def quadratic_dz_solver(y: ComplexVec, epsilon: float) -> Callable[[ComplexVec, np.ndarray], DzResult]:
    """Hook dz_solver untuk g(z) = ||y - z||^2 - eps."""

    def solve(mu: ComplexVec, nu: np.ndarray) -> DzResult:
        z, value = dz_quadratic(y, epsilon, mu, nu[0])
        if not math.isfinite(value):
            return DzResult.unbounded(len(y))
        return DzResult(z, value)

    return solve


def quadratic_constraint(y: ComplexVec, epsilon: float) -> Callable[[ComplexVec, np.ndarray], float]:
    """g(z) = ||y - z||^2 - eps."""

    def g(z: ComplexVec, aux: np.ndarray = None) -> float:
        diff = y - z
        return diff.inner(diff) - epsilon

    return g


def error_bound_constant(problem: SfpProblem, alpha: float, eps_slater: float, F0_bar: float) -> float:
    """
    Konstanta c pada |P* - P_delta*| <= c * delta:
        c = (F0_bar + lam * m(Omega)) / (alpha * eps) * max(|sum g_i(-alpha 1)|, |sum g_i(alpha 1)|)
    """
    if not alpha > 0 or not eps_slater > 0:
        raise DomainError("alpha and eps_slater must be positive")
    ones = np.ones(problem.p)
    totals = []
    for sign in (-1.0, 1.0):
        z = ComplexVec.real(sign * alpha * ones)
        total = float(np.sum(problem.constraint_values(z)))
        if not math.isfinite(total):
            raise DomainError(
                f"constraints are not finite at {sign * alpha:+g}*1; try a different alpha")
        totals.append(abs(total))
    scale = (F0_bar + problem.lam * problem.domain.measure()) / (alpha * eps_slater)
    return float(scale * max(totals))


# =============================================================================
# Interval helpers (1-D)
# =============================================================================

def inside_intervals(t: np.ndarray, intervals: Sequence[Tuple[float, float]]) -> np.ndarray:
    """Keanggotaan titik t pada gabungan interval [a, b)."""
    t = np.asarray(t, dtype=float)
    if not intervals:
        return np.zeros(t.shape, dtype=bool)
    starts = np.array([a for a, _ in intervals])
    ends = np.array([b for _, b in intervals])
    idx = np.searchsorted(starts, t, side="right") - 1
    safe = np.clip(idx, 0, len(starts) - 1)
    return (idx >= 0) & (t < ends[safe])


def subtract_intervals(base: Sequence[Tuple[float, float]],
                       removed: Sequence[Tuple[float, float]]) -> List[Tuple[float, float]]:
    out = list(base)
    for ra, rb in removed:
        pieces = []
        for a, b in out:
            if rb <= a or ra >= b:
                pieces.append((a, b))
                continue
            if a < ra:
                pieces.append((a, ra))
            if rb < b:
                pieces.append((rb, b))
        out = pieces
    return merge_intervals(out)


def inside_boxes(betas: np.ndarray, boxes) -> np.ndarray:
    betas = np.atleast_2d(betas)
    inside = np.zeros(len(betas), dtype=bool)
    for lower, upper in boxes:
        inside |= np.all((betas >= lower) & (betas < upper), axis=1)
    return inside


# =============================================================================
# Dual Engine
# =============================================================================

class DualEngine:
    """
    Evaluator dual dan solver ascent untuk satu SfpProblem.
    Satu instance tidak boleh dipakai dari dua thread sekaligus.
    """

    def __init__(self, problem: SfpProblem, scheme: Optional[QuadratureScheme] = None, *,
                 refine: bool = True, resolve_ties: bool = False,
                 tie_tol: Optional[float] = None, boundary_tol: float = BOUNDARY_TOL,
                 early_stop_tol: float = 0.0, delta_override: Optional[float] = None,
                 output_grid: int = DEFAULT_OUTPUT_GRID, check_uniqueness: bool = True):
        """
        Args:
            problem: The SFP to solve
            scheme: Quadrature scheme (default: gauss5, 512 cells)
            refine: Locate support boundaries by bisection (1-D only)
            resolve_ties: Resolve plateaus where the margin vanishes on a set
                of positive measure (primal recovery of degenerate duals)
            tie_tol: Margin tolerance for ties (default 1e-2 * max(1, lam))
            boundary_tol: Bisection tolerance relative to the domain side
            early_stop_tol: Stop when ||p_mu|| + ||p_nu|| stays below this
            delta_override: Fixed delta for the acceptance rule
            output_grid: Number of grid points sampled from recovered primals
            check_uniqueness: Probe recovered minimizers for non-uniqueness
        """
        self._problem = problem
        self._scheme = scheme if scheme is not None else build_composite(problem.domain, 512, "gauss5")
        self._refine = refine
        self._resolve_ties = resolve_ties
        self._tie_tol = tie_tol
        self._boundary_tol = boundary_tol
        self._early_stop_tol = early_stop_tol
        self._delta_override = delta_override
        self._output_grid = output_grid
        self._check_uniqueness = check_uniqueness

    @property
    def problem(self) -> SfpProblem:
        return self._problem

    @property
    def scheme(self) -> QuadratureScheme:
        return self._scheme

    @property
    def tie_tol(self) -> float:
        if self._tie_tol is not None:
            return self._tie_tol
        return TIE_TOL_FACTOR * max(1.0, self._problem.lam)

    # -------------------------------------------------------------------------
    # Pointwise
    # -------------------------------------------------------------------------

    def minimize(self, mu: ComplexVec, betas: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(x*, gamma_o) pada setiap beta; pakai hook batch bila tersedia."""
        problem = self._problem
        betas = np.atleast_2d(np.asarray(betas, dtype=float))
        if len(betas) == 0:
            return np.zeros(0), np.zeros(0)
        if problem.minimize_batch is not None:
            x, value = problem.minimize_batch(mu, betas)
            return np.asarray(x, dtype=float), np.asarray(value, dtype=float)

        x = np.empty(len(betas))
        value = np.empty(len(betas))
        for j, beta in enumerate(betas):
            if problem.pointwise_minimizer is not None:
                res = problem.pointwise_minimizer(mu, beta)
                x[j], value[j] = res[0], res[1]
            else:
                res = self.solve_pointwise_generic(mu, beta)
                x[j], value[j] = res.x_star, res.value
        return x, value

    def solve_pointwise_generic(self, mu: ComplexVec, beta: np.ndarray, l1_weight: float = 0.0):
        """solve_generic pada x -> F0(x, b) + Re[mu^H F(x, b)] (+ l1_weight*|x|)."""
        problem = self._problem

        def objective(x: float) -> float:
            return problem.f0(x, beta) + mu.inner(problem.F(x, beta)) + l1_weight * abs(x)

        # Radius dihitung ulang per (mu, beta): 10x titik stasioner terbesar
        radius = None
        if problem.search_radius is not None and not problem.pointwise_set.bounded:
            radius = search_radius_for(objective, problem.search_radius(mu, beta))
        return solve_generic(objective, problem.pointwise_set, search_radius=radius)

    def pointwise(self, mu: ComplexVec, betas: np.ndarray, lam: Optional[float] = None):
        """(x*, gamma_o, gamma_0, margin) pada setiap beta."""
        lam = self._problem.lam if lam is None else lam
        betas = np.atleast_2d(np.asarray(betas, dtype=float))
        x, gamma_o = self.minimize(mu, betas)
        gamma_0 = self._problem.gamma_zero_many(mu, betas)
        return x, gamma_o, gamma_0, gamma_o - gamma_0 + lam

    # -------------------------------------------------------------------------
    # Dual function
    # -------------------------------------------------------------------------

    def eval_dual(self, point: DualPoint, scheme: Optional[QuadratureScheme] = None) -> DualEvaluation:
        """
        d(mu, nu) = int_S (lam + gamma_o) + int_{Omega \\ S} gamma_0 + d_z.

        Returns:
            DualEvaluation; in_domain=False (value -inf) when d_z is unbounded below
        """
        scheme = scheme if scheme is not None else self._scheme
        dz = self._problem.dz_solver(point.mu, point.nu)
        if not dz.bounded:
            return DualEvaluation(-math.inf, -math.inf, dz.z, [], 0.0, math.inf,
                                  False, point, dz)

        if scheme.domain.dim == 1 and self._refine:
            plan, support, delta = self._refined_plan(point.mu, scheme, dz)
        elif scheme.domain.dim == 1:
            plan, support, delta = self._tiled_plan(point.mu, scheme)
        else:
            plan, support, delta = self._cell_plan(point.mu, scheme)

        lam = self._problem.lam
        d_x = plan.d_x(lam)
        if scheme.domain.dim == 1:
            measure = intervals_measure(support)
        else:
            measure = float(sum(np.prod(u - l) for l, u in support))
        return DualEvaluation(d_x + dz.value, dz.value, dz.z, support, measure,
                              max(delta, scheme.delta), True, point, dz, d_x, plan)

    def _refined_plan(self, mu: ComplexVec, scheme: QuadratureScheme, dz: DzResult):
        lo, hi = scheme.domain.lo, scheme.domain.hi
        samples = np.concatenate([[lo], scheme.nodes[:, 0], [hi]])
        x_s, go_s, g0_s, margin = self.pointwise(mu, samples[:, None])
        inside = margin < 0

        intervals = self._locate_support(mu, samples, inside, lo, hi)
        if self._resolve_ties:
            intervals = self._resolve_tie_runs(mu, scheme, samples, x_s, margin, intervals, dz)

        base = (x_s[1:-1], go_s[1:-1], g0_s[1:-1])
        plan = self._assemble_1d(mu, scheme, intervals, base)

        # delta: skema kasar dengan interval yang sama
        if scheme.cells_per_dim >= 2:
            coarse = scheme.coarsened()
            factor = (scheme.cells_per_dim / coarse.cells_per_dim) ** scheme.order - 1.0
        else:
            coarse = build_composite(scheme.domain, 1, "midpoint" if scheme.rule == "gauss5" else "gauss5")
            factor = 1.0
        coarse_plan = self._assemble_1d(mu, coarse, intervals, None)
        lam = self._problem.lam
        delta = abs(plan.d_x(lam) - coarse_plan.d_x(lam)) / factor
        return plan, intervals, delta

    def _locate_support(self, mu, samples, inside, lo, hi) -> List[Tuple[float, float]]:
        """Bisection pada setiap pergantian tanda margin antar sampel berurutan."""
        flips = np.flatnonzero(inside[:-1] != inside[1:])
        boundaries = np.zeros(0)
        if flips.size:
            a = samples[flips].copy()
            b = samples[flips + 1].copy()
            left_in = inside[flips]
            tol = self._boundary_tol * (hi - lo)
            gap = float(np.max(b - a))
            n_iter = int(math.ceil(math.log2(max(gap / tol, 1.0)))) + 1
            for _ in range(n_iter):
                mid = 0.5 * (a + b)
                _, _, _, m_mid = self.pointwise(mu, mid[:, None])
                same = (m_mid < 0) == left_in
                a = np.where(same, mid, a)
                b = np.where(same, b, mid)
            boundaries = 0.5 * (a + b)
            starts = list(boundaries[~left_in])
            ends = list(boundaries[left_in])
        else:
            starts, ends = [], []
        if inside[0]:
            starts.insert(0, lo)
        if inside[-1]:
            ends.append(hi)
        return merge_intervals(list(zip(starts, ends)))

    def _assemble_1d(self, mu: ComplexVec, scheme: QuadratureScheme,
                     intervals: Sequence[Tuple[float, float]], base=None) -> IntegrationPlan:
        """
        Rakit node integrasi: sel tanpa batas support memakai node skema,
        sel yang memuat batas dipecah dan rule diterapkan per potongan.
        """
        edges = scheme.cell_edges()
        cuts = np.array(sorted({e for iv in intervals for e in iv}))
        if cuts.size:
            cells = np.searchsorted(edges, cuts, side="right") - 1
            interior = (cells >= 0) & (cells < scheme.cells_per_dim)
            cells_c = np.clip(cells, 0, scheme.cells_per_dim - 1)
            interior &= (cuts > edges[cells_c]) & (cuts < edges[cells_c + 1])
            split_cells = np.unique(cells_c[interior])
        else:
            split_cells = np.zeros(0, dtype=int)

        keep = ~np.isin(scheme.cell_of_node, split_cells)
        kept_nodes = scheme.nodes[keep, 0]
        kept_weights = scheme.weights[keep]
        if base is not None:
            x_k, go_k, g0_k = (arr[keep] for arr in base)
        else:
            x_k, go_k, g0_k, _ = self.pointwise(mu, kept_nodes[:, None])

        piece_a: List[float] = []
        piece_b: List[float] = []
        for c in split_cells:
            inner = cuts[(cuts > edges[c]) & (cuts < edges[c + 1])]
            pts = np.concatenate([[edges[c]], inner, [edges[c + 1]]])
            piece_a.extend(pts[:-1])
            piece_b.extend(pts[1:])
        if piece_a:
            new_nodes, new_weights = rule_on_intervals(scheme.rule, np.array(piece_a), np.array(piece_b))
            x_n, go_n, g0_n, _ = self.pointwise(mu, new_nodes[:, None])
        else:
            new_nodes = new_weights = x_n = go_n = g0_n = np.zeros(0)

        nodes = np.concatenate([kept_nodes, new_nodes])
        weights = np.concatenate([kept_weights, new_weights])
        x_all = np.concatenate([x_k, x_n])
        inside = inside_intervals(nodes, intervals)
        return IntegrationPlan(nodes[:, None], weights, inside,
                               np.where(inside, x_all, 0.0),
                               np.concatenate([go_k, go_n]), np.concatenate([g0_k, g0_n]))

    def _tiled_plan(self, mu: ComplexVec, scheme: QuadratureScheme):
        """Tanpa refinement: tiap node memiliki tile selebar bobotnya."""
        plan = self._node_plan(mu, scheme)
        edges = scheme.domain.lo + np.concatenate([[0.0], np.cumsum(scheme.weights)])
        support = merge_intervals([(edges[j], edges[j + 1]) for j in np.flatnonzero(plan.inside)])
        return plan, support, self._richardson(mu, scheme, plan, self._node_plan)

    def _cell_plan(self, mu: ComplexVec, scheme: QuadratureScheme):
        """n-D: setiap sel diklasifikasi lewat mayoritas berbobot margin node-nya."""
        plan = self._classify_cells(mu, scheme)
        lower, upper = scheme.cell_boxes()
        cells_in = np.unique(scheme.cell_of_node[plan.inside])
        support = [(lower[c], upper[c]) for c in cells_in]
        return plan, support, self._richardson(mu, scheme, plan, self._classify_cells)

    def _node_plan(self, mu: ComplexVec, scheme: QuadratureScheme) -> IntegrationPlan:
        x, go, g0, margin = self.pointwise(mu, scheme.nodes)
        inside = margin < 0
        return IntegrationPlan(scheme.nodes, scheme.weights, inside, np.where(inside, x, 0.0), go, g0)

    def _classify_cells(self, mu: ComplexVec, scheme: QuadratureScheme) -> IntegrationPlan:
        x, go, g0, margin = self.pointwise(mu, scheme.nodes)
        w_in = np.bincount(scheme.cell_of_node, weights=scheme.weights * (margin < 0), minlength=scheme.n_cells)
        w_all = np.bincount(scheme.cell_of_node, weights=scheme.weights, minlength=scheme.n_cells)
        inside = (w_in > 0.5 * w_all)[scheme.cell_of_node]
        return IntegrationPlan(scheme.nodes, scheme.weights, inside, np.where(inside, x, 0.0), go, g0)

    def _richardson(self, mu, scheme, plan, builder) -> float:
        lam = self._problem.lam
        if scheme.cells_per_dim >= 2:
            coarse = scheme.coarsened()
            factor = (scheme.cells_per_dim / coarse.cells_per_dim) ** scheme.order - 1.0
        else:
            coarse = build_composite(scheme.domain, 1, "midpoint" if scheme.rule == "gauss5" else "gauss5")
            factor = 1.0
        return abs(plan.d_x(lam) - builder(mu, coarse).d_x(lam)) / factor

    # -------------------------------------------------------------------------
    # Tie runs
    # -------------------------------------------------------------------------

    def _resolve_tie_runs(self, mu, scheme, samples, x_s, margin, intervals, dz) -> List[Tuple[float, float]]:
        """
        Pada plateau |margin| <= tie_tol, pilih fraksi depan tiap run agar
        int F[X] cocok dengan z_d (least squares terbatas di [0, 1]).
        """
        problem = self._problem
        betas = samples[:, None]
        contrib = problem.measure_many(x_s, betas) - problem.measure_many(np.zeros_like(x_s), betas)
        stacked = np.concatenate([contrib.real, contrib.imag], axis=1)
        norms = np.linalg.norm(stacked, axis=1)
        tie = (np.abs(margin) <= self.tie_tol) & (norms > 0)
        if not np.any(tie):
            return intervals

        units = np.zeros_like(stacked)
        units[tie] = stacked[tie] / norms[tie, None]

        # Run: sampel seri berurutan dengan arah kontribusi yang sama
        runs: List[List[int]] = []
        for k in np.flatnonzero(tie):
            if runs and runs[-1][-1] == k - 1 and np.dot(units[k], units[k - 1]) > 1.0 - 1e-6:
                runs[-1].append(k)
            else:
                runs.append([k])

        lo, hi = scheme.domain.lo, scheme.domain.hi
        last = len(samples) - 1
        extents = []
        for run in runs:
            i0, i1 = run[0], run[-1]
            a = lo if i0 == 0 else 0.5 * (samples[i0 - 1] + samples[i0])
            b = hi if i1 == last else 0.5 * (samples[i1] + samples[i1 + 1])
            extents.append((a, b))

        # Kelompokkan run berarah paralel menjadi satu kolom
        group_of_run = []
        reps: List[np.ndarray] = []
        for run in runs:
            direction = units[run[0]]
            for g, rep in enumerate(reps):
                if np.dot(direction, rep) > 1.0 - 1e-6:
                    group_of_run.append(g)
                    break
            else:
                reps.append(direction)
                group_of_run.append(len(reps) - 1)

        fixed = subtract_intervals(intervals, extents)
        base_plan = self._assemble_1d(mu, scheme, fixed, None)
        baseline = base_plan.weights @ problem.measure_many(base_plan.x, base_plan.nodes)

        columns = np.zeros((2 * problem.p, len(reps)))
        edges = scheme.cell_edges()
        for (a, b), g in zip(extents, group_of_run):
            pts = np.concatenate([[a], edges[(edges > a) & (edges < b)], [b]])
            nodes, weights = rule_on_intervals(scheme.rule, pts[:-1], pts[1:])
            x_run, _ = self.minimize(mu, nodes[:, None])
            diff = problem.measure_many(x_run, nodes[:, None]) - problem.measure_many(np.zeros_like(x_run), nodes[:, None])
            col = weights @ diff
            columns[:, g] += np.concatenate([col.real, col.imag])

        target = dz.z.as_complex() - baseline
        rhs = np.concatenate([target.real, target.imag])
        theta = lsq_linear(columns, rhs, bounds=(0.0, 1.0)).x

        resolved = list(fixed)
        for (a, b), g in zip(extents, group_of_run):
            if theta[g] > 0:
                resolved.append((a, a + theta[g] * (b - a)))
        logger.debug("Resolved %d tie runs, fractions %s", len(runs), np.round(theta, 6).tolist())
        return merge_intervals(resolved)

    # -------------------------------------------------------------------------
    # Supergradients
    # -------------------------------------------------------------------------

    def supergradients(self, point: DualPoint, evaluation: DualEvaluation) -> Tuple[ComplexVec, np.ndarray]:
        """
        p_mu = int F[X_d(mu, b), b] db - z_d,  p_nu_i = g_i(z_d).
        """
        if not evaluation.in_domain:
            raise DomainError("supergradients are undefined outside the dual domain")
        plan = evaluation.plan
        integral = plan.weights @ self._problem.measure_many(plan.x, plan.nodes)
        p_mu = ComplexVec.from_complex(integral) - evaluation.dz_minimizer
        p_nu = self._problem.constraint_values(evaluation.dz_minimizer, evaluation.dz.aux)
        return p_mu, p_nu

    def stochastic_supergradients(self, point: DualPoint, evaluation: DualEvaluation,
                                  sampler: McSampler, call_index: int) -> Tuple[ComplexVec, np.ndarray]:
        """p_mu diganti estimator Monte Carlo m(Omega) * mean_j F[X_d(b_j), b_j] - z_d."""
        betas = mc_nodes(sampler, call_index)
        x, _, _, margin = self.pointwise(point.mu, betas)
        x = np.where(margin < 0, x, 0.0)
        estimate = sampler.domain.measure() * self._problem.measure_many(x, betas).mean(axis=0)
        p_mu = ComplexVec.from_complex(estimate) - evaluation.dz_minimizer
        p_nu = self._problem.constraint_values(evaluation.dz_minimizer, evaluation.dz.aux)
        return p_mu, p_nu

    # -------------------------------------------------------------------------
    # Ascent loops
    # -------------------------------------------------------------------------

    def _step_size(self, eta0: float, schedule: str, t: int) -> float:
        if schedule == "constant":
            return eta0
        if schedule == "inv-sqrt":
            return eta0 / math.sqrt(t)
        raise DomainError(f"unknown schedule {schedule!r}; choose one of {SCHEDULES}")

    def _primal_value(self, evaluation: DualEvaluation) -> float:
        """P pada minimizer Lagrangian (X_d, z_d)."""
        plan = evaluation.plan
        cost = float(plan.weights @ self._problem.cost_many(plan.x, plan.nodes))
        value = cost + self._problem.lam * evaluation.support_measure
        if self._problem.aux_cost is not None:
            value += float(self._problem.aux_cost(evaluation.dz.aux))
        return value

    def _ascent_loop(self, steps: int, eta0: float, schedule: str,
                     gradient: Callable, on_iterate: Optional[Callable] = None,
                     start: Optional[DualPoint] = None):
        if steps < 0:
            raise DomainError(f"steps must be >= 0 (got {steps})")
        if not eta0 > 0:
            raise DomainError(f"eta0 must be positive (got {eta0})")
        self._step_size(eta0, schedule, 1)

        started = time.perf_counter()
        report = SolveReport()
        point = start if start is not None else self._problem.start_point()
        evaluation = self.eval_dual(point)
        if not evaluation.in_domain or not math.isfinite(evaluation.value):
            raise DomainError(f"initial dual point {point!r} lies outside the dual domain "
                              f"(d={evaluation.value})")

        def record(ev: DualEvaluation, eta: float):
            report.dual_trace.append(ev.value)
            report.eta_trace.append(eta)
            report.support_trace.append(ev.support_measure)
            report.gap_trace.append(abs(self._primal_value(ev) - ev.value))

        record(evaluation, 0.0)
        best_point, best_eval, best_t = point, evaluation, 0
        if on_iterate is not None:
            on_iterate(0, point, evaluation)

        quiet_steps = 0
        for t in range(1, steps + 1):
            p_mu, p_nu = gradient(point, evaluation, t)

            if self._early_stop_tol > 0:
                size = p_mu.norm() + float(np.linalg.norm(p_nu))
                quiet_steps = quiet_steps + 1 if size <= self._early_stop_tol else 0
                if quiet_steps >= EARLY_STOP_PATIENCE:
                    report.early_stopped = True
                    logger.info("Early stop at t=%d (supergradient norm %.3g)", t, size)
                    break

            # Kandidat di luar domain, non-finite, atau jatuh jauh di bawah d_best: eta dibagi dua
            eta = self._step_size(eta0, schedule, t)
            floor = best_eval.value - ASCENT_DROP_FACTOR * (abs(best_eval.value) + 1.0)
            for _ in range(MAX_BACKTRACKS + 1):
                candidate, cand_eval = self._try_step(point, p_mu, p_nu, eta)
                if cand_eval is not None and cand_eval.value >= floor:
                    break
                report.rejected_steps += 1
                eta *= 0.5
            else:
                report.backtrack_exhausted = True
                logger.warning("Warning: no acceptable step after %d halvings at t=%d "
                               "(d_best=%.6g)", MAX_BACKTRACKS, t, best_eval.value)
                break

            point, evaluation = candidate, cand_eval
            record(evaluation, eta)
            report.wall_iterations = t
            if evaluation.value > best_eval.value:
                best_point, best_eval, best_t = point, evaluation, t
            if on_iterate is not None:
                on_iterate(t, point, evaluation)
            logger.debug("t=%d d=%.10g eta=%.3g l0=%.6g", t, evaluation.value, eta,
                         evaluation.support_measure)

        report.best_t = best_t
        report.elapsed = time.perf_counter() - started
        if report.rejected_steps:
            logger.info("Ascent rejected %d candidate steps", report.rejected_steps)
        return best_point, best_eval, report

    def _try_step(self, point: DualPoint, p_mu: ComplexVec, p_nu: np.ndarray,
                  eta: float) -> Tuple[Optional[DualPoint], Optional[DualEvaluation]]:
        """Satu langkah proyeksi; (None, None) bila kandidat tidak valid."""
        try:
            candidate = point.step(p_mu, p_nu, eta)
        except DomainError:
            return None, None
        cand_eval = self.eval_dual(candidate)
        if not cand_eval.in_domain or not math.isfinite(cand_eval.value):
            return None, None
        return candidate, cand_eval

    def ascend(self, steps: int, eta0: float, schedule: str = "inv-sqrt",
               start: Optional[DualPoint] = None) -> Tuple[DualPoint, SolveReport]:
        """
        Dual ascent: mu += eta p_mu, nu = [nu + eta p_nu]_+, kembalikan iterate terbaik.
        """
        best_point, best_eval, report = self._ascent_loop(
            steps, eta0, schedule, lambda pt, ev, t: self.supergradients(pt, ev), start=start)
        report.delta_used = best_eval.delta
        report.final_gap_estimate = abs(self._primal_value(best_eval) - best_eval.value)
        logger.info("✓ Ascent done: d_best=%.10g at t=%d (%d iterations)",
                    report.best_value, report.best_t, report.wall_iterations)
        return best_point, report

    def solve_approximate(self, steps: int, eta0: float, schedule: str = "inv-sqrt",
                          start: Optional[DualPoint] = None) -> Tuple[PrimalSolution, SolveReport]:
        """
        Ascent dengan aturan penerimaan 2-delta: solusi primal hanya diperbarui
        bila d_t > d_terakhir_diterima + 2*delta.
        """
        accepted = {}
        deltas = []

        def on_iterate(t, point, evaluation):
            delta = self._delta_override
            if delta is None:
                delta = max(self._scheme.delta, evaluation.delta)
            deltas.append(delta)
            if not accepted:
                accepted.update(t=t, point=point, evaluation=evaluation)
                report_accepted.append(t)
            elif evaluation.value > accepted["evaluation"].value + 2.0 * delta:
                accepted.update(t=t, point=point, evaluation=evaluation)
                report_accepted.append(t)

        report_accepted: List[int] = []
        _, best_eval, report = self._ascent_loop(
            steps, eta0, schedule, lambda pt, ev, t: self.supergradients(pt, ev), on_iterate, start)
        report.accepted_iterations = report_accepted
        report.delta_used = float(max(deltas)) if deltas else 0.0

        solution = self.recover_primal(accepted["point"], accepted["evaluation"])
        report.final_gap_estimate = abs(solution.objective_value - report.best_value)
        logger.info("✓ Approximate solve: P=%.10g d_best=%.10g gap=%.3g (accepted %d, delta=%.3g)",
                    solution.objective_value, report.best_value, report.final_gap_estimate,
                    len(report_accepted), report.delta_used)
        return solution, report

    def solve_stochastic(self, sampler: McSampler, steps: int, eta0: float,
                         schedule: str = "inv-sqrt",
                         reporting_scheme: Optional[QuadratureScheme] = None,
                         start: Optional[DualPoint] = None) -> Tuple[PrimalSolution, SolveReport]:
        """
        Ascent dengan supergradien Monte Carlo. Iterate yang memperbaiki d
        (diukur dengan skema pelaporan) disimpan, hasil akhirnya rata-rata pointwise.
        """
        engine = self
        if reporting_scheme is not None and reporting_scheme is not self._scheme:
            engine = self._rebuilt(scheme=reporting_scheme)

        kept: List[PrimalSolution] = []
        previous = {}

        def on_iterate(t, point, evaluation):
            if t > 0 and evaluation.value > previous["value"]:
                kept.append(engine.recover_primal(point, evaluation, check=False))
                report_accepted.append(t)
            previous["value"] = evaluation.value

        report_accepted: List[int] = []
        _, _, report = engine._ascent_loop(
            steps, eta0, schedule,
            lambda pt, ev, t: engine.stochastic_supergradients(pt, ev, sampler, t),
            on_iterate, start)
        report.accepted_iterations = report_accepted
        report.delta_used = (self._delta_override if self._delta_override is not None
                             else engine.scheme.delta)

        if not kept:
            raise NoAcceptedIterateError(
                f"stochastic ascent retained no improving iterate after {steps} steps")

        solution = engine.average_solutions(kept)
        report.final_gap_estimate = abs(solution.objective_value - report.best_value)
        logger.info("✓ Stochastic solve: averaged %d iterates, P=%.10g d_best=%.10g",
                    len(kept), solution.objective_value, report.best_value)
        return solution, report

    # -------------------------------------------------------------------------
    # Primal recovery
    # -------------------------------------------------------------------------

    def _support_mask(self, support, betas: np.ndarray) -> np.ndarray:
        if self._problem.domain.dim == 1:
            return inside_intervals(betas[:, 0], support)
        return inside_boxes(betas, support)

    def _as_points(self, beta) -> np.ndarray:
        betas = np.asarray(beta, dtype=float)
        if self._problem.domain.dim == 1:
            return betas.reshape(-1, 1)
        return np.atleast_2d(betas)

    def recover_primal(self, point: DualPoint, evaluation: DualEvaluation,
                       output_grid: Optional[int] = None, check: bool = True) -> PrimalSolution:
        """
        X*(b) = minimizer pointwise di dalam support, 0 di luar.
        P = int F0[X*] + lam * l0 (+ biaya auxiliary).
        """
        if not evaluation.in_domain:
            raise DomainError("cannot recover a primal solution outside the dual domain")
        support = evaluation.support
        mu = point.mu

        def evaluator(beta) -> np.ndarray:
            betas = self._as_points(beta)
            out = np.zeros(len(betas))
            mask = self._support_mask(support, betas)
            if np.any(mask):
                x, _ = self.minimize(mu, betas[mask])
                out[mask] = x
            return out

        grid = values = None
        n_grid = output_grid or self._output_grid
        if self._problem.domain.dim == 1 and n_grid:
            grid = np.linspace(self._problem.domain.lo, self._problem.domain.hi, int(n_grid))
            values = evaluator(grid)

        unique = True
        if check and self._check_uniqueness and support:
            unique = self._probe_uniqueness(mu, support)

        return PrimalSolution(
            support=list(support),
            objective_value=self._primal_value(evaluation),
            measurements=evaluation.dz_minimizer,
            l0=evaluation.support_measure,
            aux=evaluation.dz.aux,
            evaluator=evaluator,
            grid=grid,
            values=values,
            constraint_values=self._problem.constraint_values(evaluation.dz_minimizer, evaluation.dz.aux),
            unique=unique,
        )

    def _probe_uniqueness(self, mu: ComplexVec, support) -> bool:
        """Bandingkan minimizer dengan pencarian generik di beberapa titik support."""
        if self._problem.domain.dim != 1:
            return True
        probes = []
        for a, b in support:
            probes.append(0.5 * (a + b))
        probes = probes[:UNIQUENESS_PROBES]
        x_ref, v_ref = self.minimize(mu, np.array(probes)[:, None])
        for beta, x0, v0 in zip(probes, x_ref, v_ref):
            res = self.solve_pointwise_generic(mu, np.array([beta]))
            same_value = abs(res.value - v0) <= 1e-9 * (1.0 + abs(v0))
            if same_value and abs(res.x_star - x0) > 1e-3 * (1.0 + abs(x0)):
                logger.warning("Warning: pointwise minimizer is not unique at beta=%.6g "
                               "(x=%.6g vs %.6g)", beta, x0, res.x_star)
                return False
        return True

    def average_solutions(self, solutions: List[PrimalSolution]) -> PrimalSolution:
        """Rata-rata pointwise dari beberapa solusi primal."""
        problem = self._problem

        def evaluator(beta) -> np.ndarray:
            return np.mean([sol.evaluator(beta) for sol in solutions], axis=0)

        if problem.domain.dim == 1:
            support = merge_intervals([iv for sol in solutions for iv in sol.support])
            l0 = intervals_measure(support)
        else:
            boxes = {}
            for sol in solutions:
                for lower, upper in sol.support:
                    boxes[(tuple(lower), tuple(upper))] = (lower, upper)
            support = list(boxes.values())
            l0 = float(sum(np.prod(u - l) for l, u in support))

        z = ComplexVec.from_complex(np.mean([s.measurements.as_complex() for s in solutions], axis=0))
        aux = np.mean([s.aux for s in solutions], axis=0) if solutions[0].aux.size else np.zeros(0)

        values_at_nodes = evaluator(self._scheme.nodes if problem.domain.dim > 1 else self._scheme.nodes[:, 0])
        cost = float(self._scheme.weights @ problem.cost_many(values_at_nodes, self._scheme.nodes))
        objective = cost + problem.lam * l0
        if problem.aux_cost is not None and aux.size:
            objective += float(problem.aux_cost(aux))

        grid = values = None
        if solutions[0].grid is not None:
            grid = solutions[0].grid
            values = np.mean([s.values for s in solutions], axis=0)

        return PrimalSolution(support, objective, z, l0, aux, evaluator, grid, values,
                              problem.constraint_values(z, aux), all(s.unique for s in solutions))

    # -------------------------------------------------------------------------
    # L0 / L1
    # -------------------------------------------------------------------------

    def _require_l1_form(self):
        problem = self._problem
        if not problem.pointwise_set.bounded:
            raise DomainError("the L1 dual needs a magnitude-bounded pointwise set")
        gamma = problem.pointwise_set.bound
        nodes = self._scheme.nodes
        for x in (-gamma, gamma):
            cost = problem.cost_many(np.full(len(nodes), x), nodes)
            if np.any(np.abs(cost) > 0):
                raise DomainError("the L1 dual needs F0 == 0")
        return gamma

    def eval_dual_l1(self, point: DualPoint) -> float:
        """
        d_1(mu, nu): thresholding dengan lambda diganti Gamma (berlaku saat F(0, b) = 0).
        """
        gamma = self._require_l1_form()
        l1_engine = self._with_problem(self._problem.with_lambda(gamma))
        return l1_engine.eval_dual(point).value

    def check_l0_l1_scaling(self, point: DualPoint, probes: int = 64) -> float:
        """
        |d_0(mu, nu) - (1/Gamma) d_1(Gamma mu, Gamma nu)|; lempar
        SaturationHypothesisError bila minimizer L1 tidak jenuh.
        """
        gamma = self._require_l1_form()
        scaled = point.scale(gamma)
        self._probe_saturation(scaled.mu, gamma, probes)
        d0 = self.eval_dual(point).value
        d1 = self.eval_dual_l1(scaled)
        return abs(d0 - d1 / gamma)

    def _probe_saturation(self, mu: ComplexVec, gamma: float, probes: int):
        nodes = self._scheme.nodes
        idx = np.unique(np.linspace(0, len(nodes) - 1, min(probes, len(nodes))).astype(int))
        tol = 1e-6 * gamma
        for j in idx:
            beta = nodes[j]
            res = self.solve_pointwise_generic(mu, beta, l1_weight=1.0)
            size = abs(res.x_star)
            if size > tol and abs(size - gamma) > tol:
                raise SaturationHypothesisError(mu, beta.tolist(), res.x_star, gamma)

    def _with_problem(self, problem: SfpProblem) -> "DualEngine":
        return self._rebuilt(problem=problem)

    def _rebuilt(self, problem: Optional[SfpProblem] = None,
                 scheme: Optional[QuadratureScheme] = None) -> "DualEngine":
        """Engine baru dengan problem / skema lain; semua opsi lain ikut disalin."""
        return DualEngine(problem if problem is not None else self._problem,
                          scheme if scheme is not None else self._scheme, refine=self._refine,
                          resolve_ties=self._resolve_ties, tie_tol=self._tie_tol,
                          boundary_tol=self._boundary_tol,
                          early_stop_tol=self._early_stop_tol,
                          delta_override=self._delta_override,
                          output_grid=self._output_grid,
                          check_uniqueness=self._check_uniqueness)
