"""
Shared fixtures. src/ is put on sys.path the same way run.py does it.
"""

import os
import sys

_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(_ROOT, "src"))

import numpy as np
import pytest

from core.problem import ComplexVec, Domain, PointwiseSet, SfpProblem
from services.dual_service import quadratic_constraint, quadratic_dz_solver
from services.fda_service import synthetic_dataset
from services.property_service import example1_problem
from services.quadrature_service import build_composite
from services.scalar_service import solve_quadratic_linear_batch


def make_toy_problem(lam: float = 0.0, y: float = 1.0, epsilon: float = 0.25,
                     batch: bool = True) -> SfpProblem:
    """
    Omega = [0, 1], F0 = x^2, F = x, (y - z)^2 <= eps.
    Untuk lam = 0, y = 1, eps = 0.25: mu* = -1, nu* = 1, P* = d* = 0.25.
    """
    y_vec = ComplexVec.real([y])

    def minimize_batch(mu, betas):
        return solve_quadratic_linear_batch(np.full(len(betas), mu.re[0]))

    return SfpProblem(
        domain=Domain.interval(0.0, 1.0),
        lam=lam,
        p=1,
        m=1,
        f0=lambda x, beta: x * x,
        F=lambda x, beta: ComplexVec.real([x]),
        g=[quadratic_constraint(y_vec, epsilon)],
        dz_solver=quadratic_dz_solver(y_vec, epsilon),
        pointwise_set=PointwiseSet.all_reals(),
        minimize_batch=minimize_batch if batch else None,
        measure_batch=(lambda x, betas: x[:, None].astype(complex)) if batch else None,
        cost_batch=(lambda x, betas: x * x) if batch else None,
        name="toy",
    )


@pytest.fixture
def unit_domain():
    return Domain.interval(0.0, 1.0)


@pytest.fixture
def toy_problem():
    return make_toy_problem()


@pytest.fixture
def toy_scheme(unit_domain):
    return build_composite(unit_domain, 16, "gauss5")


@pytest.fixture
def two_block():
    """Instance dua-blok dengan Gamma = 1, y = (0.3, -0.2)."""
    return example1_problem(1.0, 0.3, -0.2)


@pytest.fixture(scope="session")
def fda_samples():
    return synthetic_dataset(20, seed=3, knots=32)
