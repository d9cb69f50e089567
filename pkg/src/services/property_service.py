"""
Layanan Properti - Suite pemeriksaan invarian numerik
Suite: duality (gap primal-dual), scaling (relasi L0/L1 pada instance dua-blok),
mc (unbiasedness supergradien Monte Carlo), perturbation (|P* - P_delta*| linear di delta).
Juga menyediakan instance dua-blok (indikator setengah domain) untuk demo L0/L1.
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from core.problem import ComplexVec, Domain, DualPoint, PointwiseSet, SfpProblem
from services.dual_service import (
    DualEngine, PrimalSolution, SolveReport, error_bound_constant,
    quadratic_constraint, quadratic_dz_solver,
)
from services.fda_service import build_rfda, synthetic_dataset
from services.quadrature_service import McSampler, QuadratureScheme, build_composite
from services.spectral_service import build_lse, centered_times, SinusoidScene, synthesize
from utils.constants import EXAMPLE1_ETA0, EXAMPLE1_STEPS
from utils.errors import DomainError
from utils.logger import get_logger

logger = get_logger(__name__)

SUITES = ("duality", "scaling", "mc", "perturbation")


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: str


# =============================================================================
# Instance dua-blok (indikator setengah kiri / kanan)
# =============================================================================

def example1_problem(gamma: float, y1: float, y2: float, lam: float = 1.0,
                     epsilon: float = 1e-8) -> SfpProblem:
    """
    Omega = [0, 1], h(b) = (1{b <= 1/2}, 1{b > 1/2}), F(x, b) = x h(b), F0 = 0,
    |x| <= Gamma, ||y - z||^2 <= eps. Nilai optimum P0 = (|y1| + |y2|) / Gamma.
    """
    if not (abs(y1) < gamma / 2 and abs(y2) < gamma / 2):
        raise DomainError(f"need |y1|, |y2| < Gamma/2 (got y=({y1}, {y2}), Gamma={gamma})")
    y = ComplexVec.real([y1, y2])
    pset = PointwiseSet.magnitude_bound(gamma)

    def indicator(betas: np.ndarray) -> np.ndarray:
        left = (np.asarray(betas, dtype=float).reshape(-1) <= 0.5).astype(float)
        return np.stack([left, 1.0 - left], axis=1)

    def f0(x: float, beta) -> float:
        return 0.0

    def F(x: float, beta) -> ComplexVec:
        return ComplexVec.real(x * indicator(beta)[0])

    def minimize_batch(mu: ComplexVec, betas: np.ndarray):
        c = indicator(betas[:, 0]) @ mu.re
        x = -gamma * np.sign(c)
        return x, -gamma * np.abs(c)

    def measure_batch(x: np.ndarray, betas: np.ndarray) -> np.ndarray:
        return (x[:, None] * indicator(betas[:, 0])).astype(complex)

    def cost_batch(x: np.ndarray, betas: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))

    nu0 = 1.0 / (2.0 * math.sqrt(epsilon))
    return SfpProblem(
        domain=Domain.interval(0.0, 1.0),
        lam=float(lam),
        p=2,
        m=1,
        f0=f0,
        F=F,
        g=[quadratic_constraint(y, epsilon)],
        dz_solver=quadratic_dz_solver(y, epsilon),
        pointwise_set=pset,
        minimize_batch=minimize_batch,
        measure_batch=measure_batch,
        cost_batch=cost_batch,
        initial_point=DualPoint(ComplexVec.zeros(2), np.array([nu0])),
        name="two-block",
    )


@dataclass
class Example1Result:
    p0: PrimalSolution
    p1: PrimalSolution
    report0: SolveReport
    report1: SolveReport
    p0_value: float
    p1_value: float
    residual: float
    delta: float


def solve_example1(gamma: float, y1: float, y2: float, steps: int = EXAMPLE1_STEPS, eta0: float = EXAMPLE1_ETA0,
                   schedule: str = "inv-sqrt", cells: int = 2, rule: str = "midpoint",
                   epsilon: float = 1e-8) -> Example1Result:
    """Selesaikan dual P0 (lambda=1) dan P1 (lambda=Gamma) pada instance dua-blok."""
    problem0 = example1_problem(gamma, y1, y2, 1.0, epsilon)
    scheme = build_composite(problem0.domain, cells, rule)
    engine0 = DualEngine(problem0, scheme, resolve_ties=True)
    sol0, report0 = engine0.solve_approximate(steps, eta0, schedule)

    problem1 = problem0.with_lambda(gamma)
    start1 = problem0.start_point().scale(gamma)
    engine1 = DualEngine(problem1, scheme, resolve_ties=True)
    sol1, report1 = engine1.solve_approximate(steps, eta0 * gamma, schedule, start=start1)

    p0 = report0.best_value
    p1 = report1.best_value
    delta = max(report0.delta_used, report1.delta_used)
    return Example1Result(sol0, sol1, report0, report1, p0, p1, abs(p0 - p1 / gamma), delta)


# =============================================================================
# Desk instances
# =============================================================================

def desk_linear_lse(p: int = 8, seed: int = 0) -> Tuple[SfpProblem, SinusoidScene, np.ndarray]:
    scene = SinusoidScene(np.array([0.2]), np.array([1.5]), centered_times(p), 0.01)
    y = synthesize(scene, seed)
    return build_lse(y, scene.times, 1.0, 1.0, p * 0.01), scene, y


def desk_saturated_lse(p: int = 8, seed: int = 0) -> Tuple[SfpProblem, SinusoidScene, np.ndarray]:
    scene = SinusoidScene(np.array([0.2]), np.array([2.0]), centered_times(p), 0.01, r=1.0)
    y = synthesize(scene, seed)
    return build_lse(y, scene.times, 1.0, 1.0, p * 0.01, r=1.0), scene, y


def desk_rfda(n: int = 10, seed: int = 0) -> SfpProblem:
    samples = synthetic_dataset(n, seed=seed, knots=24)
    return build_rfda(samples, 0.1, 4.0, 0.5 * n * math.log(2.0))


def scheme_for_delta(problem: SfpProblem, target: float, rule: str = "midpoint",
                     point: Optional[DualPoint] = None, start_cells: int = 2,
                     max_cells: int = 1 << 14) -> QuadratureScheme:
    """Gandakan jumlah sel sampai delta dual pada titik probe <= target."""
    point = point if point is not None else problem.start_point()
    cells = start_cells
    while True:
        scheme = build_composite(problem.domain, cells, rule)
        delta = DualEngine(problem, scheme).eval_dual(point).delta
        if delta <= target or cells >= max_cells:
            return scheme.with_delta(delta)
        cells *= 2


# =============================================================================
# Suites
# =============================================================================

def check_duality(seed: int = 0, steps: int = 1500, cells: int = 64) -> List[PropertyResult]:
    results = []
    instances = [
        ("linear-lse", desk_linear_lse(seed=seed)[0], 0.05),
        ("saturated-lse", desk_saturated_lse(seed=seed)[0], 0.05),
        ("rfda", desk_rfda(seed=seed), 0.02),
    ]
    for name, problem, eta0 in instances:
        scheme = build_composite(problem.domain, cells, "gauss5")
        engine = DualEngine(problem, scheme)
        sol, report = engine.solve_approximate(steps, eta0, "inv-sqrt")
        bound = 2.0 * report.delta_used + 1e-3
        gap = report.final_gap_estimate
        results.append(PropertyResult(f"duality/{name}", gap <= bound,
                                      f"gap={gap:.3g} bound={bound:.3g}"))
        # Weak duality terhadap kandidat feasible: X* itu sendiri bila feasible
        feasible = bool(np.all(sol.constraint_values <= 1e-9))
        if feasible:
            ok = report.best_value <= sol.objective_value + 2.0 * report.delta_used + 1e-9
            results.append(PropertyResult(f"weak-duality/{name}", ok,
                                          f"d={report.best_value:.6g} P={sol.objective_value:.6g}"))
    return results


def check_scaling(seed: int = 0, points: int = 100) -> List[PropertyResult]:
    results = []
    example = solve_example1(1.0, 0.3, -0.2)
    for label, value in (("P0", example.p0_value), ("P1", example.p1_value)):
        results.append(PropertyResult(f"example1/{label}", abs(value - 0.5) <= 1e-3,
                                      f"value={value:.6g} expected 0.5"))
    results.append(PropertyResult(
        "example1/support", abs(example.p0.l0 - 0.5) <= 1e-3, f"l0={example.p0.l0:.6g}"))

    problem = example1_problem(1.0, 0.3, -0.2)
    engine = DualEngine(problem, build_composite(problem.domain, 2, "midpoint"))
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_bound = 0.0
    ok = True
    for _ in range(points):
        point = DualPoint(ComplexVec.real(rng.uniform(-2, 2, size=2)), rng.uniform(0.1, 10, size=1))
        residual = engine.check_l0_l1_scaling(point)
        bound = 2.0 * engine.eval_dual(point).delta + 1e-12
        worst = max(worst, residual)
        worst_bound = max(worst_bound, bound)
        ok &= residual <= bound
    results.append(PropertyResult("scaling/identity", bool(ok),
                                  f"max residual={worst:.3g} (2*delta<={worst_bound:.3g})"))
    return results


def check_mc(seed: int = 0, repeats: int = 1000, batch: int = 8) -> List[PropertyResult]:
    problem, _, _ = desk_linear_lse(seed=seed)
    scheme = build_composite(problem.domain, 256, "gauss5")
    engine = DualEngine(problem, scheme)
    rng = np.random.default_rng(seed)
    results = []
    for k in range(5):
        point = DualPoint(ComplexVec.real(rng.normal(0.0, 2.0, size=problem.p)), np.ones(1))
        ev = engine.eval_dual(point)
        exact, _ = engine.supergradients(point, ev)
        sampler = McSampler(problem.domain, batch, seed + 1000 * k)
        draws = np.array([engine.stochastic_supergradients(point, ev, sampler, i)[0].re
                          for i in range(repeats)])
        se = draws.std(axis=0, ddof=1) / math.sqrt(repeats)
        z = np.abs(draws.mean(axis=0) - exact.re) / np.maximum(se, 1e-15)
        results.append(PropertyResult(f"mc/point{k}", bool(np.all(z <= 4.0)),
                                      f"max z-score={float(np.max(z)):.3g}"))
    return results


def check_perturbation(seed: int = 0, deltas=(1e-2, 1e-3, 1e-4), steps: int = 1500,
                       eta0: float = 0.05) -> List[PropertyResult]:
    problem, _, y = desk_linear_lse(seed=seed)
    reference = DualEngine(problem, build_composite(problem.domain, 256, "gauss5"))
    point_star, ref_report = reference.ascend(steps, eta0, "inv-sqrt")
    p_star = ref_report.best_value

    errors = []
    used = []
    for target in deltas:
        scheme = scheme_for_delta(problem, target, "midpoint", point_star)
        sol, report = DualEngine(problem, scheme, refine=False).solve_approximate(steps, eta0, "inv-sqrt")
        errors.append(abs(report.best_value - p_star))
        used.append(max(scheme.delta, 1e-300))

    slope = float(np.polyfit(np.log(used), np.log(np.maximum(errors, 1e-300)), 1)[0])
    results = [PropertyResult("perturbation/slope", 0.7 <= slope <= 1.3, f"slope={slope:.3g}")]

    # Slater: z = y memberi g = -eps
    eps = -float(problem.constraint_values(ComplexVec.real(y))[0])
    c = error_bound_constant(problem, 1.0, eps, max(p_star, float(sol.objective_value)))
    within = all(err <= c * d * 1.1 for err, d in zip(errors, used))
    results.append(PropertyResult("perturbation/bound", within,
                                  f"c={c:.3g} errors={[f'{e:.3g}' for e in errors]}"))
    return results


SUITE_RUNNERS: Dict[str, Callable[..., List[PropertyResult]]] = {
    "duality": check_duality,
    "scaling": check_scaling,
    "mc": check_mc,
    "perturbation": check_perturbation,
}


def run_suite(name: str, seed: int = 0) -> List[PropertyResult]:
    if name not in SUITE_RUNNERS:
        raise DomainError(f"unknown suite {name!r}; choose one of {SUITES}")
    results = SUITE_RUNNERS[name](seed=seed)
    for res in results:
        level = "✓" if res.passed else "✗"
        logger.info("%s %s: %s", level, res.name, res.detail)
    return results
