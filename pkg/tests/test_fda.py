"""
Robust functional logistic regression: samples, logistic d_z, classifier,
impulsive corruption and evaluation.
"""

import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from core.problem import ComplexVec, Domain
from main import main
from services.dual_service import PrimalSolution
from services.fda_service import (
    FunctionalSample, RobustClassifier, build_rfda, corrupt_impulsive, dz_logistic,
    evaluate, logistic_loss, predict_many, predict_proba, sample_matrix, score,
    synthetic_dataset, train_classifier,
)
from services.quadrature_service import build_composite
from utils.constants import (
    RFDA_EPS_TILDE, RFDA_ETA0, RFDA_LAMBDA, RFDA_SATURATION, RFDA_STEPS, RFDA_TRAIN_SIZE,
)
from utils.errors import DomainError

_SCHEME = build_composite(Domain.interval(0.0, 1.0), 16, "gauss5")


def _constant_classifier(weight: float = 1.0, intercept: float = 0.0, r: float = math.inf):
    sol = PrimalSolution([(0.0, 1.0)], 0.0, ComplexVec.zeros(1), 1.0, np.zeros(1),
                         lambda tau: np.full(np.size(tau), weight))
    return RobustClassifier(sol, intercept, r, 0.0, [(0.0, 1.0)])


def _flat(value: float, label: int) -> FunctionalSample:
    return FunctionalSample.from_series(np.full(5, value), label)


# ═══════════════════════════════════════════════════════════════════════════════
# Functional samples
# ═══════════════════════════════════════════════════════════════════════════════


def test_sample_interpolates_linearly():
    z = FunctionalSample(np.array([0.0, 0.5, 1.0]), np.array([0.0, 2.0, 0.0]), 1)
    assert z(0.25) == pytest.approx(1.0)
    np.testing.assert_allclose(z(np.array([0.0, 0.5, 0.75])), [0.0, 2.0, 1.0])


def test_sample_validation():
    with pytest.raises(DomainError):
        FunctionalSample(np.array([0.0, 0.6, 0.5, 1.0]), np.zeros(4), 0)
    with pytest.raises(DomainError):
        FunctionalSample(np.array([0.1, 1.0]), np.zeros(2), 0)
    with pytest.raises(DomainError):
        FunctionalSample.from_series([1.0, 2.0], 2)
    with pytest.raises(DomainError):
        _flat(1.0, 0)(1.5)


def test_sample_matrix_shape():
    samples = [_flat(1.0, 0), _flat(-2.0, 1)]
    M = sample_matrix(samples, np.array([0.1, 0.5, 0.9]))
    assert M.shape == (3, 2)
    np.testing.assert_allclose(M[:, 1], -2.0)


# ═══════════════════════════════════════════════════════════════════════════════
# Logistic d_z
# ═══════════════════════════════════════════════════════════════════════════════


def test_dz_logistic_centre_point():
    """mu = (nu/2) s memberi q = 1/2 sehingga u = 0."""
    labels = np.array([0, 1, 1, 0])
    s = 1.0 - 2.0 * labels
    u, b, value = dz_logistic(labels, 0.5 * 2.0 * s, 2.0, 1.0)
    np.testing.assert_allclose(u, 0.0, atol=1e-12)
    assert b == pytest.approx(0.0)
    assert value == pytest.approx(2.0 * 4 * math.log(2.0) - 2.0)


def test_dz_logistic_matches_numeric_minimum():
    labels = np.array([0, 1, 0])
    s = 1.0 - 2.0 * labels
    nu, eps = 1.5, 0.7
    mu = np.array([0.4, -1.1, 0.2])
    u, b, value = dz_logistic(labels, mu, nu, eps)

    oracle = -nu * eps
    for s_i, mu_i in zip(s, mu):
        res = minimize_scalar(lambda t: nu * np.logaddexp(0.0, s_i * t) - mu_i * t)
        oracle += res.fun
    total = mu.sum()
    oracle += minimize_scalar(lambda t: t * t + total * t).fun
    assert value == pytest.approx(oracle, abs=1e-7)
    assert b == pytest.approx(-0.5 * total)


def test_dz_logistic_out_of_domain():
    labels = np.array([0, 1])
    # q_0 = mu_0 s_0 / nu = 1 -> batas domain
    assert dz_logistic(labels, np.array([1.0, -0.5]), 1.0, 1.0)[2] == -math.inf
    assert dz_logistic(labels, np.array([-0.1, -0.5]), 1.0, 1.0)[2] == -math.inf
    assert dz_logistic(labels, np.array([0.5, -0.5]), 0.0, 1.0)[2] == -math.inf


def test_logistic_loss():
    assert logistic_loss([0, 1], [0.0, 0.0]) == pytest.approx(2.0 * math.log(2.0))
    assert logistic_loss([1], [50.0]) == pytest.approx(0.0, abs=1e-12)


# ═══════════════════════════════════════════════════════════════════════════════
# SFP construction
# ═══════════════════════════════════════════════════════════════════════════════


def test_build_rfda_rejects_bad_inputs(fda_samples):
    with pytest.raises(DomainError):
        build_rfda(fda_samples[:1], 0.1, 4.0, 5.0)
    with pytest.raises(DomainError):
        build_rfda([s for s in fda_samples if s.label == 1], 0.1, 4.0, 5.0)
    with pytest.raises(DomainError):
        build_rfda(fda_samples, 0.1, 4.0, 0.0)


def test_rfda_start_point_is_inside_dual_domain(fda_samples):
    problem = build_rfda(fda_samples, 0.1, 4.0, 5.0)
    start = problem.start_point()
    dz = problem.dz_solver(start.mu, start.nu)
    assert dz.bounded
    assert dz.aux.shape == (1,)
    # z = u - b, dengan u = 0 di pusat domain
    np.testing.assert_allclose(dz.z.re, -dz.aux[0])


def test_rfda_constraint_uses_intercept(fda_samples):
    problem = build_rfda(fda_samples, 0.1, 4.0, 5.0)
    z = ComplexVec.zeros(len(fda_samples))
    labels = [s.label for s in fda_samples]
    expected = logistic_loss(labels, np.full(len(labels), 0.3)) - 5.0
    assert problem.constraint_values(z, np.array([0.3]))[0] == pytest.approx(expected)
    assert problem.aux_cost(np.array([0.3])) == pytest.approx(0.09)


# ═══════════════════════════════════════════════════════════════════════════════
# Classifier & evaluation
# ═══════════════════════════════════════════════════════════════════════════════


def test_predict_proba_uses_printed_intercept():
    clf = _constant_classifier(weight=1.0, intercept=0.5)
    # score = int Z W = 2, prob = expit(2 - 0.5)
    p = predict_proba(clf, _flat(2.0, 1), _SCHEME)
    assert p == pytest.approx(1.0 / (1.0 + math.exp(-1.5)))


def test_predict_saturates_inner_product():
    clf = _constant_classifier(weight=1.0, r=1.0)
    probs = predict_many(clf, [_flat(50.0, 1), _flat(1.0, 1)], _SCHEME)
    assert probs[0] == pytest.approx(probs[1])


def test_evaluate_perfect_separation():
    clf = _constant_classifier()
    samples = [_flat(1.0, 1), _flat(-1.0, 0), _flat(2.0, 1), _flat(-0.5, 0)]
    result = evaluate(clf, samples, _SCHEME)
    assert result.accuracy == 1.0
    assert result.auc == pytest.approx(1.0)
    assert result.roc[0] == (0.0, 0.0)


def test_evaluate_single_class():
    result = evaluate(_constant_classifier(), [_flat(1.0, 1), _flat(2.0, 1)], _SCHEME)
    assert result.roc is None and result.auc is None
    assert result.accuracy == 1.0
    with pytest.raises(DomainError):
        evaluate(_constant_classifier(), [], _SCHEME)


# ═══════════════════════════════════════════════════════════════════════════════
# Corruption
# ═══════════════════════════════════════════════════════════════════════════════


def test_corrupt_impulsive_counts(fda_samples):
    corrupted = corrupt_impulsive(fda_samples, 0.1, 20.0, seed=1)
    for clean, dirty in zip(fda_samples, corrupted):
        changed = np.flatnonzero(clean.values != dirty.values)
        assert changed.size == math.ceil(0.1 * 32)
        np.testing.assert_allclose(np.abs(dirty.values[changed] - clean.values[changed]), 20.0)
        assert dirty.label == clean.label


def test_corrupt_impulsive_edge_cases(fda_samples):
    same = corrupt_impulsive(fda_samples, 0.0, 20.0)
    assert all(np.array_equal(a.values, b.values) for a, b in zip(same, fda_samples))
    with pytest.raises(DomainError):
        corrupt_impulsive(fda_samples, 1.5, 1.0)


# ═══════════════════════════════════════════════════════════════════════════════
# Training
# ═══════════════════════════════════════════════════════════════════════════════


def test_train_classifier_improves_dual(fda_samples):
    eps = 0.5 * len(fda_samples) * math.log(2.0)
    clf, report = train_classifier(fda_samples, 0.1, 4.0, eps, scheme=_SCHEME, steps=60, eta0=0.1)
    assert report.best_value >= report.dual_trace[0]
    assert math.isfinite(clf.intercept)
    probs = predict_many(clf, fda_samples, _SCHEME)
    assert np.all((probs > 0.0) & (probs < 1.0))


def test_robust_score_has_bounded_influence(fda_samples):
    """Korupsi sebesar apa pun mengubah skor paling banyak 2r * ukuran {W != 0}."""
    eps = 0.5 * len(fda_samples) * math.log(2.0)
    clf, _ = train_classifier(fda_samples, 0.1, 4.0, eps, scheme=_SCHEME, steps=60, eta0=0.1)
    taus = _SCHEME.nodes[:, 0]
    bound = 2.0 * clf.r * float(_SCHEME.weights[clf.W(taus) != 0].sum()) + 1e-9
    dirty = corrupt_impulsive(fda_samples, 0.25, 1e6, seed=2)
    for clean, bad in zip(fda_samples, dirty):
        change = abs(score(clf, bad, _SCHEME) - score(clf, clean, _SCHEME))
        assert change <= bound, f"score moved by {change:.4g} > {bound:.4g}"


def test_plain_score_is_unbounded_under_corruption():
    clean = _flat(1.0, 1)
    bad = clean.with_values(clean.values + 1e6)
    change = abs(score(_constant_classifier(), bad, _SCHEME) - score(_constant_classifier(), clean, _SCHEME))
    assert change > 1e5


# ═══════════════════════════════════════════════════════════════════════════════
# Protocol training (slow)
# ═══════════════════════════════════════════════════════════════════════════════


@pytest.mark.slow
def test_sparsity_weight_shrinks_support():
    train = synthetic_dataset(RFDA_TRAIN_SIZE, seed=0)
    sparse, _ = train_classifier(train, RFDA_LAMBDA, RFDA_SATURATION, RFDA_EPS_TILDE,
                                 steps=RFDA_STEPS, eta0=RFDA_ETA0)
    dense, _ = train_classifier(train, 0.0, RFDA_SATURATION, RFDA_EPS_TILDE,
                                steps=RFDA_STEPS, eta0=RFDA_ETA0)
    assert sparse.weight.l0 < dense.weight.l0, \
        f"support with lambda={RFDA_LAMBDA}: {sparse.weight.l0:.3g}, lambda=0: {dense.weight.l0:.3g}"


@pytest.mark.slow
def test_huge_saturation_matches_plain_trainer(fda_samples):
    eps = 0.5 * len(fda_samples) * math.log(2.0)
    scheme = build_composite(Domain.interval(0.0, 1.0), 64, "gauss5")
    saturated, _ = train_classifier(fda_samples, 0.1, 1e8, eps, scheme=scheme, steps=200, eta0=0.1)
    plain, _ = train_classifier(fda_samples, 0.1, math.inf, eps, scheme=scheme, steps=200, eta0=0.1)
    taus = np.linspace(0.0, 1.0, 1001)
    l2 = math.sqrt(float(np.mean((saturated.W(taus) - plain.W(taus)) ** 2)))
    assert l2 <= 1e-3, f"L2 distance {l2:.3g}"
    assert saturated.intercept == pytest.approx(plain.intercept, abs=1e-3)


def _accuracy_drops(out_dir) -> dict:
    rows = [line.split(",") for line in (out_dir / "rfda_metrics.csv").read_text().splitlines()[1:]]
    acc = {(model, split): float(value) for model, split, value, _ in rows}
    return {model: acc[(model, "clean")] - acc[(model, "corrupted")] for model in ("plain", "robust")}


@pytest.mark.slow
def test_robust_model_degrades_less_under_corruption(tmp_path):
    """Set sintetis, 10 seed: penurunan akurasi robust < plain."""
    drops = []
    for seed in range(10):
        out = tmp_path / f"seed{seed}"
        assert main(["solve-rfda", "--seed", str(seed), "--out", str(out)]) == 0
        drops.append(_accuracy_drops(out))
    plain = np.array([d["plain"] for d in drops])
    robust = np.array([d["robust"] for d in drops])
    assert robust.mean() < plain.mean(), f"plain drops {plain}, robust drops {robust}"
    assert int(np.sum(robust < plain)) >= 8, f"plain drops {plain}, robust drops {robust}"
