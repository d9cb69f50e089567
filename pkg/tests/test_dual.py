"""
Dual engine: thresholded dual evaluation, supergradients, ascent solvers,
primal recovery, and the L0 / L1 scaling relation.
"""

import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from core.problem import ComplexVec, Domain, DualPoint, DzResult, PointwiseSet, SfpProblem
from services.dual_service import (
    DualEngine, SolveReport, dz_quadratic, error_bound_constant, quadratic_constraint,
    quadratic_dz_solver,
)
from services.property_service import example1_problem, solve_example1
from services.quadrature_service import McSampler, build_composite
from services.spectral_service import build_lse, centered_times
from utils.errors import DomainError, NoAcceptedIterateError, SaturationHypothesisError

from conftest import make_toy_problem

_P_STAR = 0.25  # optimum instance toy (lam = 0, y = 1, eps = 0.25)


def _point(mu, nu):
    return DualPoint(ComplexVec.real(np.atleast_1d(mu)), np.atleast_1d(np.asarray(nu, dtype=float)))


# ═══════════════════════════════════════════════════════════════════════════════
# d_z closed form
# ═══════════════════════════════════════════════════════════════════════════════


def test_dz_quadratic_matches_numeric_minimum():
    y = ComplexVec.real([0.4])
    mu = ComplexVec.real([-0.7])
    nu, eps = 1.3, 0.1
    z, value = dz_quadratic(y, eps, mu, nu)
    assert z.re[0] == pytest.approx(0.4 - 0.7 / 2.6)
    oracle = minimize_scalar(lambda t: nu * ((0.4 - t) ** 2 - eps) + 0.7 * t)
    assert value == pytest.approx(oracle.fun, abs=1e-10)


def test_dz_quadratic_zero_nu():
    y = ComplexVec.real([1.0, 2.0])
    z, value = dz_quadratic(y, 0.5, ComplexVec.zeros(2), 0.0)
    assert value == 0.0
    np.testing.assert_array_equal(z.re, y.re)
    _, value = dz_quadratic(y, 0.5, ComplexVec.real([1.0, 0.0]), 0.0)
    assert value == -math.inf


def test_dz_solver_flags_unbounded():
    solver = quadratic_dz_solver(ComplexVec.real([1.0]), 0.25)
    assert not solver(ComplexVec.real([1.0]), np.array([0.0])).bounded
    assert solver(ComplexVec.real([1.0]), np.array([1.0])).bounded


# ═══════════════════════════════════════════════════════════════════════════════
# eval_dual
# ═══════════════════════════════════════════════════════════════════════════════


def test_eval_dual_at_optimum(toy_problem, toy_scheme):
    engine = DualEngine(toy_problem, toy_scheme)
    ev = engine.eval_dual(_point(-1.0, 1.0))
    assert ev.in_domain
    assert ev.value == pytest.approx(_P_STAR, abs=1e-12)
    assert ev.d_x == pytest.approx(-0.25)
    assert ev.support_measure == pytest.approx(1.0)


def test_eval_dual_ties_are_outside(toy_problem, toy_scheme):
    """mu = 0: margin = 0 di mana-mana, support kosong."""
    ev = DualEngine(toy_problem, toy_scheme).eval_dual(_point(0.0, 1.0))
    assert ev.support == []
    assert ev.value == pytest.approx(-0.25)


def test_thresholding_with_positive_lambda(toy_scheme):
    problem = make_toy_problem(lam=0.1)
    engine = DualEngine(problem, toy_scheme)
    assert engine.eval_dual(_point(-1.0, 1.0)).support_measure == pytest.approx(1.0)
    assert engine.eval_dual(_point(-0.5, 1.0)).support_measure == 0.0


def test_eval_dual_outside_domain(toy_problem, toy_scheme):
    ev = DualEngine(toy_problem, toy_scheme).eval_dual(_point(1.0, 0.0))
    assert not ev.in_domain
    assert ev.value == -math.inf


def test_support_boundary_located(two_block):
    """Blok kiri masuk support (|c| = 2 > lam), blok kanan tidak."""
    scheme = build_composite(two_block.domain, 2, "midpoint")
    engine = DualEngine(two_block, scheme)
    ev = engine.eval_dual(_point([2.0, 0.1], 5000.0))
    assert len(ev.support) == 1
    a, b = ev.support[0]
    assert a == 0.0
    assert b == pytest.approx(0.5, abs=1e-5)
    assert ev.d_x == pytest.approx(-0.5, abs=1e-5)


def test_refined_dual_matches_fine_grid_oracle():
    """d_X = int min(gamma_0, lam + gamma_o); bandingkan dengan grid sangat halus."""
    p = 4
    times = centered_times(p)
    y = np.array([0.5, -0.2, 0.1, 0.3])
    lam = 2.0
    problem = build_lse(y, times, 1.0, lam, 0.1)
    mu = np.array([3.0, -2.0, 1.5, 2.5])
    engine = DualEngine(problem, build_composite(problem.domain, 64, "gauss5"))
    ev = engine.eval_dual(_point(mu, 1.0))

    phi = (np.arange(400000) + 0.5) / 400000 * 0.5
    c = np.cos(2 * np.pi * np.outer(phi, times)) @ mu
    oracle = 0.5 * np.mean(np.minimum(0.0, lam - 0.25 * c * c))
    assert ev.d_x == pytest.approx(oracle, abs=1e-5)
    assert 0.0 < ev.support_measure < 0.5


def test_generic_pointwise_path(unit_domain):
    """Tanpa hook closed form, solve_generic dipakai per node."""
    problem = make_toy_problem(batch=False)
    engine = DualEngine(problem, build_composite(unit_domain, 2, "midpoint"))
    ev = engine.eval_dual(_point(-1.0, 1.0))
    assert ev.value == pytest.approx(_P_STAR, abs=1e-8)


def test_generic_radius_follows_stationary_hook(unit_domain):
    """x^2 - 40x: minimizer x = 20 berada di luar radius tetap lama (10)."""
    calls = []

    def extent(mu, beta):
        calls.append(float(mu.re[0]))
        return abs(mu.re[0]) / 2.0

    problem = replace(make_toy_problem(batch=False), search_radius=extent)
    engine = DualEngine(problem, build_composite(unit_domain, 2, "midpoint"))
    res = engine.solve_pointwise_generic(ComplexVec.real([-40.0]), np.array([0.5]))
    assert res.x_star == pytest.approx(20.0, abs=1e-4), f"x*={res.x_star}"
    assert calls == [-40.0], "radius must be derived from the hook on every call"


def test_two_dimensional_cell_plan():
    y = ComplexVec.real([1.0])

    def minimize_batch(mu, betas):
        x = np.full(len(betas), -0.5 * mu.re[0])
        return x, x * x + mu.re[0] * x

    problem = SfpProblem(
        domain=Domain(np.zeros(2), np.ones(2)), lam=0.0, p=1, m=1,
        f0=lambda x, b: x * x, F=lambda x, b: ComplexVec.real([x]),
        g=[quadratic_constraint(y, 0.25)], dz_solver=quadratic_dz_solver(y, 0.25),
        minimize_batch=minimize_batch,
        measure_batch=lambda x, b: x[:, None].astype(complex),
        cost_batch=lambda x, b: x * x,
    )
    scheme = build_composite(problem.domain, 3, "gauss5")
    ev = DualEngine(problem, scheme).eval_dual(_point(-1.0, 1.0))
    assert ev.value == pytest.approx(_P_STAR)
    assert len(ev.support) == 9
    assert ev.support_measure == pytest.approx(1.0)


# ═══════════════════════════════════════════════════════════════════════════════
# Supergradients
# ═══════════════════════════════════════════════════════════════════════════════


def test_supergradient_vanishes_at_optimum(toy_problem, toy_scheme):
    engine = DualEngine(toy_problem, toy_scheme)
    point = _point(-1.0, 1.0)
    p_mu, p_nu = engine.supergradients(point, engine.eval_dual(point))
    assert p_mu.norm() == pytest.approx(0.0, abs=1e-12)
    assert p_nu[0] == pytest.approx(0.0, abs=1e-12)


def test_supergradient_inequality(toy_problem, toy_scheme):
    """d(q) <= d(p) + <g, q - p> untuk fungsi dual konkaf."""
    engine = DualEngine(toy_problem, toy_scheme)
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = _point(rng.uniform(-3, 3), rng.uniform(0.2, 3))
        q = _point(rng.uniform(-3, 3), rng.uniform(0.2, 3))
        ev_p = engine.eval_dual(p)
        g_mu, g_nu = engine.supergradients(p, ev_p)
        bound = ev_p.value + g_mu.inner(q.mu - p.mu) + float(g_nu @ (q.nu - p.nu))
        assert engine.eval_dual(q).value <= bound + 1e-10


def test_stochastic_supergradient_is_unbiased(two_block):
    scheme = build_composite(two_block.domain, 2, "midpoint")
    engine = DualEngine(two_block, scheme)
    point = _point([2.0, 0.1], 5000.0)
    ev = engine.eval_dual(point)
    exact, _ = engine.supergradients(point, ev)
    sampler = McSampler(two_block.domain, 8, seed=5)
    draws = np.array([engine.stochastic_supergradients(point, ev, sampler, i)[0].re for i in range(2000)])
    np.testing.assert_allclose(draws.mean(axis=0), exact.re, atol=0.02)


# ═══════════════════════════════════════════════════════════════════════════════
# Ascent
# ═══════════════════════════════════════════════════════════════════════════════


def test_ascent_converges_and_respects_weak_duality(toy_problem, toy_scheme):
    engine = DualEngine(toy_problem, toy_scheme)
    point, report = engine.ascend(2000, 0.5, "inv-sqrt")
    assert len(report.dual_trace) == 2001
    assert report.best_t == int(np.argmax(report.dual_trace))
    assert report.best_value == pytest.approx(_P_STAR, abs=1e-3)
    assert max(report.dual_trace) <= _P_STAR + 1e-9
    assert point.mu.re[0] == pytest.approx(-1.0, abs=0.05)
    assert not report.backtrack_exhausted


def test_best_so_far_is_monotone(toy_problem, toy_scheme):
    _, report = DualEngine(toy_problem, toy_scheme).ascend(50, 1.0, "constant")
    best = report.best_so_far()
    assert np.all(np.diff(best) >= 0)
    assert report.dual_trace[0] == pytest.approx(-0.25)


def test_solve_approximate_recovers_primal(toy_problem, toy_scheme):
    engine = DualEngine(toy_problem, toy_scheme)
    sol, report = engine.solve_approximate(2000, 0.5, "inv-sqrt")
    assert report.accepted_iterations[0] == 0
    assert sol.objective_value == pytest.approx(_P_STAR, abs=1e-2)
    np.testing.assert_allclose(sol(np.array([0.1, 0.5, 0.9])), 0.5, atol=0.02)
    assert sol.constraint_values[0] <= 5e-3
    assert report.final_gap_estimate <= 1e-2
    rows = list(report.rows())
    assert rows[0][0] == 0 and len(rows) == 2001


def test_backtracking_exhaustion_is_flagged(toy_problem, toy_scheme):
    """nu = 0: setiap langkah membuat mu != 0 dengan nu = 0 -> d_z tak terbatas."""
    engine = DualEngine(toy_problem, toy_scheme)
    _, report = engine.ascend(5, 0.1, "constant", start=_point(0.0, 0.0))
    assert report.backtrack_exhausted
    assert report.wall_iterations == 0
    assert len(report.dual_trace) == 1


def test_early_stop(toy_problem, toy_scheme):
    engine = DualEngine(toy_problem, toy_scheme, early_stop_tol=1e9)
    _, report = engine.ascend(100, 0.1)
    assert report.early_stopped
    assert len(report.dual_trace) == 10


def test_ascent_rejects_bad_arguments(toy_problem, toy_scheme):
    engine = DualEngine(toy_problem, toy_scheme)
    with pytest.raises(DomainError):
        engine.ascend(10, 0.0)
    with pytest.raises(DomainError):
        engine.ascend(10, 0.1, "cosine")
    with pytest.raises(DomainError):
        engine.ascend(-1, 0.1)


def test_solve_stochastic_averages_iterates(toy_problem, toy_scheme):
    engine = DualEngine(toy_problem, toy_scheme)
    sampler = McSampler(toy_problem.domain, 8, seed=1)
    sol, report = engine.solve_stochastic(sampler, 300, 0.5)
    assert report.accepted_iterations
    assert all(t > 0 for t in report.accepted_iterations)
    assert math.isfinite(sol.objective_value)
    assert sol(0.5) > 0.0


def test_solve_stochastic_without_steps_raises(toy_problem, toy_scheme):
    engine = DualEngine(toy_problem, toy_scheme)
    with pytest.raises(NoAcceptedIterateError):
        engine.solve_stochastic(McSampler(toy_problem.domain, 4), 0, 0.1)


# ═══════════════════════════════════════════════════════════════════════════════
# Ascent guard (collapse / non-finite candidates)
# ═══════════════════════════════════════════════════════════════════════════════


def test_collapsing_step_is_rejected(toy_problem, toy_scheme):
    """eta = 1000: langkah pertama yang masih di domain punya d ~ -160 dan harus ditolak."""
    engine = DualEngine(toy_problem, toy_scheme)
    _, report = engine.ascend(3, 1000.0, "constant")
    d0 = report.dual_trace[0]
    floor = d0 - (abs(d0) + 1.0)
    assert not report.backtrack_exhausted
    assert report.rejected_steps > 0, "oversized steps should have been halved"
    assert all(math.isfinite(v) for v in report.dual_trace)
    assert min(report.dual_trace) >= floor, f"trace {report.dual_trace} fell below {floor}"


def test_non_finite_candidate_is_rejected(toy_problem, toy_scheme):
    """d_z bernilai NaN untuk mu < -0.5: kandidat itu tidak boleh masuk jejak."""
    base = toy_problem.dz_solver

    def nan_dz(mu, nu):
        res = base(mu, nu)
        if res.bounded and mu.re[0] < -0.5:
            return DzResult(res.z, math.nan, res.aux)
        return res

    engine = DualEngine(replace(toy_problem, dz_solver=nan_dz), toy_scheme)
    point, report = engine.ascend(20, 1.0, "constant")
    assert all(math.isfinite(v) for v in report.dual_trace), f"trace={report.dual_trace}"
    assert report.best_t == int(np.argmax(report.dual_trace))
    assert report.best_value == max(report.dual_trace)
    assert point.mu.re[0] >= -0.5


def test_initial_non_finite_value_raises(toy_problem, toy_scheme):
    problem = replace(toy_problem,
                      dz_solver=lambda mu, nu: DzResult(ComplexVec.zeros(1), math.nan))
    with pytest.raises(DomainError):
        DualEngine(problem, toy_scheme).ascend(5, 0.1)


def test_stalled_report():
    stalled = SolveReport(dual_trace=[1.0, 0.5, 0.9], wall_iterations=2)
    assert stalled.stalled
    improved = SolveReport(dual_trace=[1.0, 0.5, 1.2], wall_iterations=2, best_t=2)
    assert not improved.stalled
    assert not SolveReport(dual_trace=[1.0], wall_iterations=0).stalled
    assert not SolveReport(dual_trace=[1.0, 0.5], wall_iterations=1, early_stopped=True).stalled


def test_start_at_optimum_is_not_stalled(toy_problem, toy_scheme):
    """Supergradien nol di titik awal: titik tidak berubah, bukan kegagalan."""
    engine = DualEngine(toy_problem, toy_scheme)
    point, report = engine.ascend(5, 0.1, "constant", start=_point(-1.0, 1.0))
    assert point.mu.re[0] == pytest.approx(-1.0, abs=1e-9)
    assert not report.stalled, f"trace={report.dual_trace}"


def test_stochastic_keeps_delta_override(toy_problem, toy_scheme, unit_domain):
    """Engine pelaporan yang dibangun ulang harus membawa semua opsi."""
    engine = DualEngine(toy_problem, toy_scheme, delta_override=0.125, early_stop_tol=0.0)
    rebuilt = engine._rebuilt(scheme=build_composite(unit_domain, 32, "gauss5"))
    assert rebuilt._delta_override == 0.125
    assert rebuilt.scheme is not engine.scheme

    sampler = McSampler(toy_problem.domain, 8, seed=1)
    _, report = engine.solve_stochastic(sampler, 50, 0.5,
                                        reporting_scheme=build_composite(unit_domain, 32, "gauss5"))
    assert report.delta_used == 0.125


# ═══════════════════════════════════════════════════════════════════════════════
# Primal recovery & error bound
# ═══════════════════════════════════════════════════════════════════════════════


def test_recover_primal_at_optimum(toy_problem, toy_scheme):
    engine = DualEngine(toy_problem, toy_scheme)
    point = _point(-1.0, 1.0)
    sol = engine.recover_primal(point, engine.eval_dual(point))
    assert sol(0.3) == pytest.approx(0.5)
    assert sol.objective_value == pytest.approx(_P_STAR)
    assert sol.constraint_values[0] == pytest.approx(0.0, abs=1e-12)
    assert sol.unique
    assert sol.grid is not None and sol.values.shape == sol.grid.shape


def test_recover_primal_zero_outside_support(two_block):
    engine = DualEngine(two_block, build_composite(two_block.domain, 2, "midpoint"))
    point = _point([2.0, 0.1], 5000.0)
    sol = engine.recover_primal(point, engine.eval_dual(point))
    assert sol(0.25) == pytest.approx(-1.0)
    assert sol(0.75) == 0.0


def test_error_bound_constant(toy_problem):
    """c = F0_bar / (alpha eps) * max(|g(-1)|, |g(1)|) = 1 / 0.25 * 3.75."""
    assert error_bound_constant(toy_problem, 1.0, 0.25, 1.0) == pytest.approx(15.0)
    with pytest.raises(DomainError):
        error_bound_constant(toy_problem, 0.0, 0.25, 1.0)


# ═══════════════════════════════════════════════════════════════════════════════
# L0 / L1
# ═══════════════════════════════════════════════════════════════════════════════


def test_l0_l1_scaling_identity():
    problem = example1_problem(2.0, 0.3, -0.2)
    engine = DualEngine(problem, build_composite(problem.domain, 2, "midpoint"))
    rng = np.random.default_rng(4)
    for _ in range(20):
        point = _point(rng.uniform(-2, 2, size=2), rng.uniform(0.1, 10))
        assert engine.check_l0_l1_scaling(point) <= 1e-9


def test_l1_dual_is_threshold_with_gamma():
    problem = example1_problem(2.0, 0.3, -0.2)
    engine = DualEngine(problem, build_composite(problem.domain, 2, "midpoint"))
    point = _point([0.8, -0.3], 3.0)
    expected = DualEngine(problem.with_lambda(2.0), engine.scheme).eval_dual(point).value
    assert engine.eval_dual_l1(point) == pytest.approx(expected)


def test_l1_requires_bounded_set(toy_problem, toy_scheme):
    with pytest.raises(DomainError):
        DualEngine(toy_problem, toy_scheme).eval_dual_l1(_point(-1.0, 1.0))


def test_saturation_hypothesis_violation(unit_domain):
    """|x| - 2 sin(x) pada |x| <= 3 diminimalkan di pi/3, bukan 0 atau Gamma."""
    y = ComplexVec.real([0.0])
    problem = SfpProblem(
        domain=unit_domain, lam=1.0, p=1, m=1,
        f0=lambda x, b: 0.0, F=lambda x, b: ComplexVec.real([math.sin(x)]),
        g=[quadratic_constraint(y, 0.1)], dz_solver=quadratic_dz_solver(y, 0.1),
        pointwise_set=PointwiseSet.magnitude_bound(3.0),
    )
    engine = DualEngine(problem, build_composite(unit_domain, 1, "midpoint"))
    with pytest.raises(SaturationHypothesisError):
        engine.check_l0_l1_scaling(_point(-2.0 / 3.0, 1.0), probes=1)


@pytest.mark.slow
def test_two_block_minimum_support_solution():
    result = solve_example1(1.0, 0.3, -0.2)
    assert result.p0_value == pytest.approx(0.5, abs=1e-3)
    assert result.p1_value == pytest.approx(0.5, abs=1e-3)
    assert result.p0.l0 == pytest.approx(0.5, abs=1e-3)
    # |X| = Gamma di dalam support
    inside = np.array([0.1, 0.2, 0.55, 0.65])
    np.testing.assert_allclose(np.abs(result.p0(inside)), 1.0)
