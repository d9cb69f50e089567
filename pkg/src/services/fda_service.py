"""
Layanan FDA - Regresi logistik fungsional robust (rFDA)
Sampel fungsional hasil interpolasi linear, training lewat SFP dengan
inner product tersaturasi, prediksi, evaluasi ROC/akurasi, dan korupsi impulsif.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import entr, expit, logit
from sklearn.metrics import auc, roc_curve

from core.problem import ComplexVec, Domain, DualPoint, DzResult, PointwiseSet, SfpProblem
from services.dual_service import DualEngine, PrimalSolution, SolveReport
from services.quadrature_service import QuadratureScheme, build_composite
from services.scalar_service import hard_saturation, solve_saturated_cosine, solve_saturated_cosine_batch
from utils.constants import DEFAULT_CELLS, DEFAULT_RULE, RFDA_NUM_KNOTS
from utils.errors import DomainError
from utils.logger import get_logger

logger = get_logger(__name__)


# =============================================================================
# Sampel fungsional
# =============================================================================

@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """Deret waktu berlabel; evaluasi di antara knot = interpolasi linear."""

    knots: np.ndarray
    values: np.ndarray
    label: int

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if knots.ndim != 1 or knots.shape != values.shape or knots.size < 2:
            raise DomainError("knots and values must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(knots) <= 0):
            raise DomainError("knots must be strictly increasing")
        if knots[0] != 0.0 or knots[-1] != 1.0:
            raise DomainError(f"knots must span [0, 1] (got [{knots[0]}, {knots[-1]}])")
        if self.label not in (0, 1):
            raise DomainError(f"label must be 0 or 1 (got {self.label})")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_series(cls, values, label: int) -> "FunctionalSample":
        """Knot seragam di [0, 1]."""
        values = np.asarray(values, dtype=float)
        return cls(np.linspace(0.0, 1.0, values.size), values, int(label))

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        if np.any((tau < 0.0) | (tau > 1.0)):
            raise DomainError("functional samples are only defined on [0, 1]")
        return np.interp(tau, self.knots, self.values)

    def with_values(self, values) -> "FunctionalSample":
        return FunctionalSample(self.knots, values, self.label)


def sample_matrix(samples: Sequence[FunctionalSample], taus) -> np.ndarray:
    """Z_i(tau_j) sebagai array (N, p)."""
    taus = np.asarray(taus, dtype=float)
    return np.stack([s(taus) for s in samples], axis=1)


# =============================================================================
# d_z logistik
# =============================================================================

def dz_logistic(labels, mu, nu: float, eps_tilde: float):
    """
    min_u nu * sum log(1 + exp(s_i u_i)) - mu^T u, s_i = 1 - 2 y_i,
    ditambah intercept min_b b^2 + (sum mu) b.

    Returns:
        (u, b, value), or (None, None, -inf) as the out-of-domain sentinel
        (some mu_i * s_i outside (0, nu))
    """
    s = 1.0 - 2.0 * np.asarray(labels, dtype=float)
    mu = np.asarray(mu.re if isinstance(mu, ComplexVec) else mu, dtype=float)
    nu = float(np.atleast_1d(nu)[0])
    if not nu > 0:
        return None, None, -math.inf
    q = mu * s / nu
    if np.any(q <= 0.0) or np.any(q >= 1.0):
        return None, None, -math.inf
    u = s * logit(q)
    total = float(np.sum(mu))
    b = -0.5 * total
    value = nu * float(np.sum(entr(q) + entr(1.0 - q))) - nu * eps_tilde - 0.25 * total * total
    return u, b, value


def logistic_loss(labels, yhat) -> float:
    """sum_i log(1 + exp((1 - 2 y_i) yhat_i))."""
    s = 1.0 - 2.0 * np.asarray(labels, dtype=float)
    return float(np.sum(np.logaddexp(0.0, s * np.asarray(yhat, dtype=float))))


# =============================================================================
# SFP construction
# =============================================================================

def build_rfda(samples: Sequence[FunctionalSample], lam: float, r: float, epsilon: float,
               gamma: Optional[float] = None) -> SfpProblem:
    """
    SFP training:
        Omega = [0, 1], F0 = w^2, F_i(w, tau) = rho[Z_i(tau) w],
        sum_i log(1 + exp(s_i (z_i + b))) <= eps_tilde, biaya intercept b^2.

    Args:
        samples: Training samples (both labels present)
        lam: Sparsity weight
        r: Saturation of the inner product (inf = plain model)
        epsilon: eps_tilde, the log-loss budget (> 0)
        gamma: Optional magnitude bound on W

    Returns:
        SfpProblem whose intercept lives in DzResult.aux
    """
    if len(samples) < 2:
        raise DomainError("need at least 2 samples")
    labels = np.array([s.label for s in samples], dtype=float)
    if np.all(labels == labels[0]):
        raise DomainError("all labels are identical; the loss constraint is unreachable")
    if not epsilon > 0:
        raise DomainError(f"eps_tilde must be positive (got {epsilon})")

    signs = 1.0 - 2.0 * labels
    p = len(samples)
    pset = PointwiseSet.all_reals() if gamma is None else PointwiseSet.magnitude_bound(gamma)
    limit = pset.limit

    def matrix(betas: np.ndarray) -> np.ndarray:
        return sample_matrix(samples, np.asarray(betas, dtype=float).reshape(-1))

    def f0(x: float, beta) -> float:
        return x * x

    def F(x: float, beta) -> ComplexVec:
        return ComplexVec.real(hard_saturation(matrix(beta)[0] * x, r))

    def g(z: ComplexVec, aux: np.ndarray = None) -> float:
        b = float(aux[0]) if aux is not None and np.size(aux) else 0.0
        return logistic_loss(labels, z.re + b) - epsilon

    def dz_solver(mu: ComplexVec, nu: np.ndarray) -> DzResult:
        u, b, value = dz_logistic(labels, mu, nu[0], epsilon)
        if u is None:
            return DzResult.unbounded(p)
        return DzResult(ComplexVec.real(u - b), value, np.array([b]))

    def pointwise_minimizer(mu: ComplexVec, beta):
        res = solve_saturated_cosine(mu.re, matrix(beta)[0], r, pset)
        return res.x_star, res.value

    def minimize_batch(mu: ComplexVec, betas: np.ndarray):
        return solve_saturated_cosine_batch(mu.re, matrix(betas[:, 0]), r, limit)

    def measure_batch(x: np.ndarray, betas: np.ndarray) -> np.ndarray:
        return hard_saturation(x[:, None] * matrix(betas[:, 0]), r).astype(complex)

    def cost_batch(x: np.ndarray, betas: np.ndarray) -> np.ndarray:
        return x * x

    # Pusat domain dual: q_i = mu_i s_i / nu = 1/2
    start = DualPoint(ComplexVec.real(0.5 * signs), np.ones(1))

    return SfpProblem(
        domain=Domain.interval(0.0, 1.0),
        lam=float(lam),
        p=p,
        m=1,
        f0=f0,
        F=F,
        g=[g],
        dz_solver=dz_solver,
        pointwise_set=pset,
        pointwise_minimizer=pointwise_minimizer,
        minimize_batch=minimize_batch,
        measure_batch=measure_batch,
        cost_batch=cost_batch,
        aux_cost=lambda aux: float(aux[0] ** 2),
        initial_point=start,
        name="rfda" if math.isfinite(r) else "fda-plain",
    )


# =============================================================================
# Classifier
# =============================================================================

@dataclass(eq=False)
class RobustClassifier:
    """
    P(y=1 | Z) = 1 / (1 + exp(-int rho[Z W] + b)).
    intercept disimpan dalam bentuk cetak ini (b = -b_training).
    """

    weight: PrimalSolution
    intercept: float
    r: float
    lam: float
    support: list = field(default_factory=list)

    def W(self, tau) -> np.ndarray:
        return self.weight(np.asarray(tau, dtype=float))


def train_classifier(samples: Sequence[FunctionalSample], lam: float, r: float, eps_tilde: float,
                     scheme: Optional[QuadratureScheme] = None, steps: int = 500,
                     eta0: float = 0.1, schedule: str = "inv-sqrt",
                     gamma: Optional[float] = None,
                     engine_options: Optional[dict] = None) -> Tuple[RobustClassifier, SolveReport]:
    """Latih W lewat solve_approximate lalu bungkus menjadi RobustClassifier."""
    problem = build_rfda(samples, lam, r, eps_tilde, gamma)
    if scheme is None:
        scheme = build_composite(problem.domain, DEFAULT_CELLS, DEFAULT_RULE)
    engine = DualEngine(problem, scheme, **(engine_options or {}))
    solution, report = engine.solve_approximate(steps, eta0, schedule)
    b_train = float(solution.aux[0]) if solution.aux.size else 0.0
    clf = RobustClassifier(solution, -b_train, r, lam, list(solution.support))
    logger.info("✓ Classifier trained: support=%.4g, intercept=%.4g", solution.l0, clf.intercept)
    return clf, report


def score(clf: RobustClassifier, Z: FunctionalSample, scheme: QuadratureScheme) -> float:
    """int rho[Z(tau) W(tau)] dtau."""
    taus = scheme.nodes[:, 0]
    return float(scheme.weights @ hard_saturation(Z(taus) * clf.W(taus), clf.r))


def predict_proba(clf: RobustClassifier, Z: FunctionalSample, scheme: QuadratureScheme) -> float:
    return float(expit(score(clf, Z, scheme) - clf.intercept))


def predict_many(clf: RobustClassifier, samples: Sequence[FunctionalSample],
                 scheme: QuadratureScheme) -> np.ndarray:
    taus = scheme.nodes[:, 0]
    w = clf.W(taus)
    Z = sample_matrix(samples, taus)
    scores = scheme.weights @ hard_saturation(Z * w[:, None], clf.r)
    return expit(scores - clf.intercept)


# =============================================================================
# Corruption & evaluation
# =============================================================================

def corrupt_impulsive(samples: Sequence[FunctionalSample], fraction: float, magnitude: float,
                      seed: int = 0) -> List[FunctionalSample]:
    """Tambahkan +-magnitude ke ceil(fraction * #knots) knot acak per deret."""
    if not 0.0 <= fraction <= 1.0:
        raise DomainError(f"fraction must lie in [0, 1] (got {fraction})")
    rng = np.random.default_rng(seed)
    out = []
    for sample in samples:
        n = sample.values.size
        count = int(math.ceil(round(fraction * n, 9)))
        values = sample.values.copy()
        if count and magnitude != 0:
            idx = rng.choice(n, size=count, replace=False)
            signs = rng.choice(np.array([-1.0, 1.0]), size=count)
            values[idx] += signs * magnitude
        out.append(sample.with_values(values))
    return out


@dataclass(frozen=True)
class EvaluationResult:
    """Akurasi pada threshold 0.5; roc/auc None bila set uji hanya satu kelas."""
    accuracy: float
    roc: Optional[List[Tuple[float, float]]]
    auc: Optional[float]


def evaluate(clf: RobustClassifier, samples: Sequence[FunctionalSample],
             scheme: QuadratureScheme) -> EvaluationResult:
    if not samples:
        raise DomainError("test set is empty")
    labels = np.array([s.label for s in samples])
    probs = predict_many(clf, samples, scheme)
    accuracy = float(np.mean((probs >= 0.5).astype(int) == labels))
    if np.unique(labels).size < 2:
        logger.warning("Warning: single-class test set, ROC is undefined")
        return EvaluationResult(accuracy, None, None)
    fpr, tpr, _ = roc_curve(labels, probs, drop_intermediate=False)
    return EvaluationResult(accuracy, list(zip(fpr.tolist(), tpr.tolist())), float(auc(fpr, tpr)))


# =============================================================================
# Synthetic data
# =============================================================================

def synthetic_dataset(n: int, seed: int = 0, knots: int = RFDA_NUM_KNOTS,
                      separation: float = 1.5, noise: float = 0.3) -> List[FunctionalSample]:
    """
    Dua kelas seimbang: kurva dasar halus + bump lokal di tau ~ 0.35
    bertanda +separation (kelas 1) atau -separation (kelas 0).
    """
    rng = np.random.default_rng(seed)
    tau = np.linspace(0.0, 1.0, knots)
    bump = np.exp(-0.5 * ((tau - 0.35) / 0.05) ** 2)
    samples = []
    for i in range(n):
        label = i % 2
        phase = rng.uniform(0, 2 * np.pi)
        base = 0.5 * np.sin(2 * np.pi * tau + phase) + 0.2 * np.sin(6 * np.pi * tau + rng.uniform(0, 2 * np.pi))
        sign = 1.0 if label == 1 else -1.0
        values = base + sign * separation * bump + rng.normal(0.0, noise, size=knots)
        samples.append(FunctionalSample(tau, values, label))
    return samples
