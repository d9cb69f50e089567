"""
Property suites behind `check-properties`. The full suites are slow; run
them with `pytest -m slow`.
"""

import numpy as np
import pytest

from core.problem import ComplexVec
from services.property_service import (
    SUITES, check_duality, check_perturbation, desk_linear_lse, desk_rfda, desk_saturated_lse,
    run_suite, scheme_for_delta,
)
from utils.errors import DomainError


def test_desk_instances():
    problem, scene, y = desk_linear_lse(p=8, seed=1)
    assert problem.p == 8 and y.shape == (8,)
    assert scene.freqs.tolist() == [0.2]
    sat, _, _ = desk_saturated_lse()
    assert sat.name == "lse-saturated"
    assert desk_rfda(n=6).p == 6


def test_desk_lse_is_strictly_feasible():
    """z = y memenuhi constraint dengan margin eps (titik Slater)."""
    problem, _, y = desk_linear_lse()
    assert problem.constraint_values(ComplexVec.real(y))[0] == pytest.approx(-0.08)


def test_scheme_for_delta_reaches_target():
    problem, _, _ = desk_linear_lse()
    scheme = scheme_for_delta(problem, 1e-4)
    assert scheme.delta <= 1e-4
    assert scheme.cells_per_dim >= 2


def test_unknown_suite():
    assert SUITES == ("duality", "scaling", "mc", "perturbation")
    with pytest.raises(DomainError):
        run_suite("speed")


@pytest.mark.slow
def test_scaling_suite_passes():
    results = run_suite("scaling")
    failed = [f"{r.name}: {r.detail}" for r in results if not r.passed]
    assert not failed, failed


@pytest.mark.slow
def test_mc_suite_passes():
    results = run_suite("mc")
    assert len(results) == 5
    assert all(r.passed for r in results), [r.detail for r in results]


@pytest.mark.slow
def test_duality_suite_reports_every_instance():
    results = check_duality(steps=300)
    names = {r.name for r in results}
    assert {"duality/linear-lse", "duality/saturated-lse", "duality/rfda"} <= names
    assert all(r.detail for r in results)


@pytest.mark.slow
def test_perturbation_suite_reports_slope_and_bound():
    results = check_perturbation(deltas=(1e-2, 1e-3), steps=300)
    assert [r.name for r in results] == ["perturbation/slope", "perturbation/bound"]
    assert np.isfinite(float(results[0].detail.split("=")[1]))


@pytest.mark.slow
def test_trained_rfda_duality_gap_within_two_delta():
    results = {r.name: r for r in check_duality()}
    rfda = results["duality/rfda"]
    assert rfda.passed, f"rFDA gap exceeds 2*delta + tol: {rfda.detail}"
