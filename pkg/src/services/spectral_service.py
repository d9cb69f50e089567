"""
Layanan Spektral - Estimasi line spectral nonlinear (LSE)
Sintesis sinyal tersaturasi, konstruksi SFP atas frekuensi [0, 1/2],
ekstraksi komponen (bump) dari solusi sparse, dan MSE rekonstruksi.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.problem import ComplexVec, Domain, DualPoint, PointwiseSet, SfpProblem, merge_intervals
from services.dual_service import PrimalSolution, quadratic_constraint, quadratic_dz_solver
from services.scalar_service import (
    hard_saturation, solve_quadratic_linear, solve_quadratic_linear_batch,
    solve_saturated_cosine, solve_saturated_cosine_batch,
)
from utils.constants import (
    CENTER_MODES, COMPONENT_GAUSS_POINTS, COMPONENT_MASS_FLOOR,
    LSE_AMP_RANGE, LSE_LINEAR_LAMBDA, LSE_LINEAR_LAMBDA_OVERRIDES,
    LSE_SATURATED_LAMBDA, LSE_SATURATED_LAMBDA_OVERRIDES,
)
from utils.errors import DomainError
from utils.logger import get_logger

logger = get_logger(__name__)

FREQ_DOMAIN = (0.0, 0.5)


def centered_times(p: int) -> np.ndarray:
    """t_i = -(p-1)/2 ... (p-1)/2; untuk p = 61 memberi -30..30."""
    return np.arange(p, dtype=float) - (p - 1) / 2.0


@dataclass(frozen=True, eq=False)
class SinusoidScene:
    """Komponen (f_k, a_k) pada waktu sampel t_i, dengan noise dan level saturasi r."""

    freqs: np.ndarray
    amps: np.ndarray
    times: np.ndarray
    noise_var: float = 0.0
    r: float = math.inf
    min_spacing: float = 0.0

    def __post_init__(self):
        freqs = np.atleast_1d(np.asarray(self.freqs, dtype=float))
        amps = np.atleast_1d(np.asarray(self.amps, dtype=float))
        if freqs.shape != amps.shape:
            raise DomainError("freqs and amps must have the same length")
        if np.any((freqs < FREQ_DOMAIN[0]) | (freqs > FREQ_DOMAIN[1])):
            raise DomainError(f"frequencies must lie in [0, 1/2] (got {freqs})")
        if self.noise_var < 0 or not self.r > 0:
            raise DomainError("noise_var must be >= 0 and r > 0")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))

    @property
    def K(self) -> int:
        return int(self.freqs.size)

    @property
    def p(self) -> int:
        return int(self.times.size)


def random_scene(seed: int, p: int, K: int, noise_var: float, r: float = math.inf,
                 amp_range: Tuple[float, float] = LSE_AMP_RANGE,
                 min_spacing: Optional[float] = None) -> SinusoidScene:
    """
    Scene acak: K frekuensi di [s/2, 1/2 - s/2] dengan jarak minimum s (default 4/p),
    amplitudo uniform pada amp_range.
    """
    spacing = 4.0 / p if min_spacing is None else float(min_spacing)
    rng = np.random.default_rng(seed)
    lo, hi = spacing / 2.0, FREQ_DOMAIN[1] - spacing / 2.0
    if K > 0 and (K - 1) * spacing > hi - lo:
        raise DomainError(f"cannot place {K} frequencies with spacing {spacing:g} in [0, 1/2]")

    freqs = np.zeros(0)
    for _ in range(10000):
        candidate = np.sort(rng.uniform(lo, hi, size=K))
        if K < 2 or np.min(np.diff(candidate)) >= spacing:
            freqs = candidate
            break
    else:
        raise DomainError("rejection sampling of frequencies did not converge")
    amps = rng.uniform(amp_range[0], amp_range[1], size=K)
    return SinusoidScene(freqs, amps, centered_times(p), noise_var, r, spacing)


def synthesize(scene: SinusoidScene, seed: int = 0) -> np.ndarray:
    """y_i = sum_k rho[a_k cos(2 pi f_k t_i)] + n_i, n_i ~ N(0, noise_var)."""
    clean = np.zeros(scene.p)
    for f, a in zip(scene.freqs, scene.amps):
        clean += hard_saturation(a * np.cos(2 * np.pi * f * scene.times), scene.r)
    if scene.noise_var == 0:
        return clean
    rng = np.random.default_rng(seed)
    return clean + rng.normal(0.0, math.sqrt(scene.noise_var), size=scene.p)


def lse_lambda(noise_var: float, saturated: bool) -> float:
    """Lambda protokol per noise level."""
    if saturated:
        return LSE_SATURATED_LAMBDA_OVERRIDES.get(float(noise_var), LSE_SATURATED_LAMBDA)
    return LSE_LINEAR_LAMBDA_OVERRIDES.get(float(noise_var), LSE_LINEAR_LAMBDA)


# =============================================================================
# SFP construction
# =============================================================================

def build_lse(y, times, B: float, lam: float, epsilon: float, r: float = math.inf,
              gamma: Optional[float] = None) -> SfpProblem:
    """
    SFP untuk LSE:
        Omega = [0, 1/2], F0 = x^2, F_i(x, phi) = B*rho[x cos(2 pi phi t_i)],
        g(z) = ||y - z||^2 - eps.

    Args:
        y: Samples (length p)
        times: Sample times t_i
        B: Bump scale (> 0)
        lam: Sparsity weight
        epsilon: Residual budget (> 0)
        r: Saturation level (inf = linear model)
        gamma: Optional magnitude bound on X

    Returns:
        SfpProblem with closed-form pointwise and d_z solvers
    """
    if not B > 0:
        raise DomainError(f"B must be positive (got {B})")
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive (got {epsilon})")
    y = np.asarray(y, dtype=float)
    times = np.asarray(times, dtype=float)
    if y.shape != times.shape:
        raise DomainError("samples and times must have the same length")

    y_vec = ComplexVec.real(y)
    pset = PointwiseSet.all_reals() if gamma is None else PointwiseSet.magnitude_bound(gamma)
    limit = pset.limit
    linear = math.isinf(r)

    def cosines(betas: np.ndarray) -> np.ndarray:
        return np.cos(2 * np.pi * np.asarray(betas, dtype=float).reshape(-1, 1) * times[None, :])

    def f0(x: float, beta) -> float:
        return x * x

    def F(x: float, beta) -> ComplexVec:
        return ComplexVec.real(B * hard_saturation(x * cosines(beta)[0], r))

    def pointwise_minimizer(mu: ComplexVec, beta):
        h = cosines(beta)[0]
        if linear:
            res = solve_quadratic_linear(mu, ComplexVec.real(B * h), pset)
        else:
            res = solve_saturated_cosine(B * mu.re, h, r, pset)
        return res.x_star, res.value

    def minimize_batch(mu: ComplexVec, betas: np.ndarray):
        H = cosines(betas[:, 0])
        if linear:
            return solve_quadratic_linear_batch(B * (H @ mu.re), limit)
        return solve_saturated_cosine_batch(B * mu.re, H, r, limit)

    def measure_batch(x: np.ndarray, betas: np.ndarray) -> np.ndarray:
        H = cosines(betas[:, 0])
        return (B * hard_saturation(x[:, None] * H, r)).astype(complex)

    def cost_batch(x: np.ndarray, betas: np.ndarray) -> np.ndarray:
        return x * x

    return SfpProblem(
        domain=Domain.interval(*FREQ_DOMAIN),
        lam=float(lam),
        p=int(y.size),
        m=1,
        f0=f0,
        F=F,
        g=[quadratic_constraint(y_vec, epsilon)],
        dz_solver=quadratic_dz_solver(y_vec, epsilon),
        pointwise_set=pset,
        pointwise_minimizer=pointwise_minimizer,
        minimize_batch=minimize_batch,
        measure_batch=measure_batch,
        cost_batch=cost_batch,
        # mu masuk sebagai B*mu; start nu = 1/B menyamakan ascent dengan kasus B = 1
        initial_point=DualPoint(ComplexVec.zeros(y.size), np.array([1.0 / B])),
        name="lse-linear" if linear else "lse-saturated",
    )


# =============================================================================
# Component extraction
# =============================================================================

@dataclass(frozen=True)
class ComponentEstimate:
    """Satu komponen hasil ekstraksi: frekuensi tengah bump dan amplitudo B*int X."""
    f_hat: float
    a_hat: float
    interval: Tuple[float, float] = field(default=(0.0, 0.0))


def extract_components(sol: PrimalSolution, B: float, center: str = "centroid",
                       mass_floor: float = COMPONENT_MASS_FLOOR) -> List[ComponentEstimate]:
    """
    Setiap interval support (setelah digabung) menjadi satu bump:
    a_hat = B * int_bump X*, f_hat = centroid berbobot |X*| (atau titik tengah).
    Bump dengan |a_hat| < mass_floor * max|a_hat| dibuang.
    """
    if center not in CENTER_MODES:
        raise DomainError(f"unknown center mode {center!r}; choose one of {CENTER_MODES}")
    bumps = merge_intervals(sol.support)
    if not bumps:
        return []

    ref_x, ref_w = np.polynomial.legendre.leggauss(COMPONENT_GAUSS_POINTS)
    components = []
    for a, b in bumps:
        half = 0.5 * (b - a)
        nodes = a + half * (ref_x + 1.0)
        weights = half * ref_w
        values = sol(nodes)
        a_hat = B * float(weights @ values)
        mass = float(weights @ np.abs(values))
        if center == "centroid" and mass > 0:
            f_hat = float(weights @ (np.abs(values) * nodes)) / mass
        else:
            f_hat = 0.5 * (a + b)
        components.append(ComponentEstimate(f_hat, a_hat, (a, b)))

    biggest = max(abs(c.a_hat) for c in components)
    kept = [c for c in components if abs(c.a_hat) >= mass_floor * biggest]
    if len(kept) < len(components):
        logger.debug("Dropped %d debris bumps", len(components) - len(kept))
    return sorted(kept, key=lambda c: -abs(c.a_hat))


@dataclass(frozen=True)
class ReconstructionResult:
    """MSE rekonstruksi plus jumlah komponen yang dipakai; short=True bila < K."""
    mse: float
    used: int
    short: bool


def resynthesize(components: Sequence[ComponentEstimate], times, r: float = math.inf) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    out = np.zeros(times.size)
    for comp in components:
        out += hard_saturation(comp.a_hat * np.cos(2 * np.pi * comp.f_hat * times), r)
    return out


def reconstruction_mse(y, components: Sequence[ComponentEstimate], times, r: float = math.inf,
                       K: Optional[int] = None) -> ReconstructionResult:
    """
    sum_i (y_i - yhat_i)^2 dengan yhat dari K komponen terbesar lewat model tersaturasi.
    """
    y = np.asarray(y, dtype=float)
    ranked = sorted(components, key=lambda c: -abs(c.a_hat))
    wanted = len(ranked) if K is None else int(K)
    used = ranked[:wanted]
    short = len(used) < wanted
    if short:
        logger.warning("Warning: only %d of %d components found", len(used), wanted)
    residual = y - resynthesize(used, times, r)
    return ReconstructionResult(float(residual @ residual), len(used), short)


def match_frequencies(true_freqs, components: Sequence[ComponentEstimate], tol: float) -> np.ndarray:
    """Untuk tiap f_k benar: apakah ada f_hat dalam jarak tol."""
    est = np.array([c.f_hat for c in components])
    if est.size == 0:
        return np.zeros(len(true_freqs), dtype=bool)
    return np.array([np.min(np.abs(est - f)) <= tol for f in true_freqs])


def nearest_components(true_freqs, components: Sequence[ComponentEstimate]) -> List[Optional[ComponentEstimate]]:
    """Komponen estimasi terdekat untuk tiap frekuensi benar (None bila kosong)."""
    if not components:
        return [None] * len(true_freqs)
    est = np.array([c.f_hat for c in components])
    return [components[int(np.argmin(np.abs(est - f)))] for f in true_freqs]
