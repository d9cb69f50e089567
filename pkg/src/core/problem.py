"""
Problem Types
Tipe dasar yang dipakai semua modul: domain box, vektor kompleks, titik dual,
himpunan pointwise, dan deskripsi lengkap satu sparse functional program (SFP).
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from utils.errors import DomainError


# =============================================================================
# Domain
# =============================================================================

@dataclass(frozen=True, eq=False)
class Domain:
    """Box kompak [lower, upper] di R^n dengan ukuran positif."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise DomainError(f"lower/upper shape mismatch: {lower.shape} vs {upper.shape}")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise DomainError("domain bounds must be finite")
        if np.any(lower >= upper):
            raise DomainError(f"every lower bound must be < upper bound (got {lower} / {upper})")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def interval(cls, a: float, b: float) -> "Domain":
        """Domain 1-D [a, b]."""
        return cls(np.array([a]), np.array([b]))

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def sides(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def lo(self) -> float:
        """Batas bawah (hanya domain 1-D)."""
        return float(self.lower[0])

    @property
    def hi(self) -> float:
        """Batas atas (hanya domain 1-D)."""
        return float(self.upper[0])

    def measure(self) -> float:
        """Ukuran Lebesgue: hasil kali panjang sisi."""
        return float(np.prod(self.sides))

    def contains(self, beta) -> bool:
        point = np.atleast_1d(np.asarray(beta, dtype=float))
        return bool(np.all(point >= self.lower) and np.all(point <= self.upper))

    def __repr__(self) -> str:
        if self.dim == 1:
            return f"Domain([{self.lo:g}, {self.hi:g}])"
        return f"Domain(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


# =============================================================================
# Complex Vectors & Dual Points
# =============================================================================

@dataclass(frozen=True, eq=False)
class ComplexVec:
    """
    Vektor kompleks disimpan sebagai pasangan (re, im).
    inner(a, b) = sum(a.re*b.re + a.im*b.im) = Re[a^H b].
    """

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        re = np.atleast_1d(np.asarray(self.re, dtype=float))
        im = np.atleast_1d(np.asarray(self.im, dtype=float))
        if re.shape != im.shape:
            raise DomainError(f"re/im length mismatch: {re.shape} vs {im.shape}")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @classmethod
    def zeros(cls, p: int) -> "ComplexVec":
        return cls(np.zeros(p), np.zeros(p))

    @classmethod
    def real(cls, values) -> "ComplexVec":
        values = np.atleast_1d(np.asarray(values, dtype=float))
        return cls(values, np.zeros_like(values))

    @classmethod
    def from_complex(cls, values) -> "ComplexVec":
        values = np.atleast_1d(np.asarray(values, dtype=complex))
        return cls(values.real.copy(), values.imag.copy())

    @classmethod
    def from_stacked(cls, stacked) -> "ComplexVec":
        """Kebalikan dari stacked(): vektor real panjang 2p."""
        stacked = np.asarray(stacked, dtype=float)
        p = stacked.size // 2
        return cls(stacked[:p], stacked[p:])

    def __len__(self) -> int:
        return int(self.re.size)

    def as_complex(self) -> np.ndarray:
        return self.re + 1j * self.im

    def stacked(self) -> np.ndarray:
        """Representasi real [re, im] untuk aritmetika ascent."""
        return np.concatenate([self.re, self.im])

    def inner(self, other: "ComplexVec") -> float:
        return float(np.dot(self.re, other.re) + np.dot(self.im, other.im))

    def norm(self) -> float:
        return float(math.sqrt(self.inner(self)))

    def __add__(self, other: "ComplexVec") -> "ComplexVec":
        return ComplexVec(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "ComplexVec") -> "ComplexVec":
        return ComplexVec(self.re - other.re, self.im - other.im)

    def scale(self, factor: float) -> "ComplexVec":
        return ComplexVec(factor * self.re, factor * self.im)

    def __repr__(self) -> str:
        return f"ComplexVec({np.array2string(self.as_complex(), precision=4)})"


@dataclass(frozen=True, eq=False)
class DualPoint:
    """Multiplier kompleks mu (panjang p) dan multiplier nonnegatif nu (panjang m)."""

    mu: ComplexVec
    nu: np.ndarray

    def __post_init__(self):
        nu = np.atleast_1d(np.asarray(self.nu, dtype=float))
        if np.any(nu < 0) or not np.all(np.isfinite(nu)):
            raise DomainError(f"nu must be finite and nonnegative (got {nu})")
        object.__setattr__(self, "nu", nu)

    @classmethod
    def initial(cls, p: int, m: int) -> "DualPoint":
        """Inisialisasi standar ascent: mu = 0, nu = 1."""
        return cls(ComplexVec.zeros(p), np.ones(m))

    def step(self, p_mu: ComplexVec, p_nu: np.ndarray, eta: float) -> "DualPoint":
        """mu + eta*p_mu, nu diproyeksikan ke orthant nonnegatif."""
        return DualPoint(self.mu + p_mu.scale(eta), np.maximum(self.nu + eta * np.asarray(p_nu), 0.0))

    def scale(self, factor: float) -> "DualPoint":
        return DualPoint(self.mu.scale(factor), factor * self.nu)

    def __repr__(self) -> str:
        return f"DualPoint(mu={self.mu!r}, nu={self.nu.tolist()})"


# =============================================================================
# Pointwise Set
# =============================================================================

@dataclass(frozen=True)
class PointwiseSet:
    """Himpunan nilai pointwise yang diizinkan: seluruh R atau |x| <= Gamma."""

    kind: str = "all-reals"
    bound: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("all-reals", "magnitude-bound"):
            raise DomainError(f"unknown pointwise set kind: {self.kind}")
        if self.kind == "magnitude-bound":
            if self.bound is None or not self.bound > 0 or math.isinf(self.bound):
                raise DomainError(f"magnitude bound must be a positive finite real (got {self.bound})")
        elif self.bound is not None:
            raise DomainError("all-reals set carries no bound")

    @classmethod
    def all_reals(cls) -> "PointwiseSet":
        return cls("all-reals", None)

    @classmethod
    def magnitude_bound(cls, gamma: float) -> "PointwiseSet":
        return cls("magnitude-bound", float(gamma))

    @property
    def bounded(self) -> bool:
        return self.kind == "magnitude-bound"

    @property
    def limit(self) -> float:
        """Gamma, atau inf bila tidak dibatasi."""
        return self.bound if self.bounded else math.inf

    def contains(self, x: float) -> bool:
        if not self.bounded:
            return bool(np.isfinite(x))
        return bool(abs(x) <= self.bound)

    def search_interval(self, radius: float) -> Tuple[float, float]:
        if self.bounded:
            return -self.bound, self.bound
        return -radius, radius


# =============================================================================
# Dz result
# =============================================================================

@dataclass(frozen=True, eq=False)
class DzResult:
    """
    Hasil subproblem d_z: minimizer z, nilai d_z, variabel auxiliary
    (misal intercept b), dan flag bounded. bounded=False adalah sentinel
    "di luar domain dual" (d_z = -inf).
    """

    z: ComplexVec
    value: float
    aux: np.ndarray = field(default_factory=lambda: np.zeros(0))
    bounded: bool = True

    @classmethod
    def unbounded(cls, p: int) -> "DzResult":
        return cls(ComplexVec.zeros(p), -math.inf, np.zeros(0), False)


# =============================================================================
# SFP Problem
# =============================================================================

# x array (N,), betas (N, dim) -> nilai
ScalarHook = Callable[[ComplexVec, np.ndarray], Tuple[float, float]]
BatchMinimizer = Callable[[ComplexVec, np.ndarray], Tuple[np.ndarray, np.ndarray]]
BatchMeasure = Callable[[np.ndarray, np.ndarray], np.ndarray]
BatchCost = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class SfpProblem:
    """
    Deskripsi satu SFP:
        minimize  int F0(X(b), b) db + lam * m(supp X)
        s.t.      z = int F(X(b), b) db,  g_i(z) <= 0,  X(b) in P

    f0 dan F menerima skalar x dan titik beta. Hook batch (opsional)
    mengevaluasi banyak beta sekaligus dan harus konsisten dengan versi skalarnya.
    """

    domain: Domain
    lam: float
    p: int
    m: int
    f0: Callable[[float, np.ndarray], float]
    F: Callable[[float, np.ndarray], ComplexVec]
    g: Sequence[Callable[[ComplexVec, np.ndarray], float]]
    dz_solver: Callable[[ComplexVec, np.ndarray], DzResult]
    pointwise_set: PointwiseSet = field(default_factory=PointwiseSet.all_reals)
    pointwise_minimizer: Optional[ScalarHook] = None
    minimize_batch: Optional[BatchMinimizer] = None
    measure_batch: Optional[BatchMeasure] = None
    cost_batch: Optional[BatchCost] = None
    aux_cost: Optional[Callable[[np.ndarray], float]] = None
    initial_point: Optional[DualPoint] = None
    # (mu, beta) -> |x| stasioner terbesar; radius pencarian generik = 10x nilai ini
    search_radius: Optional[Callable[[ComplexVec, np.ndarray], float]] = None
    name: str = "sfp"

    def __post_init__(self):
        if self.lam < 0 or not math.isfinite(self.lam):
            raise DomainError(f"lambda must be finite and nonnegative (got {self.lam})")
        if self.p < 1:
            raise DomainError(f"measurement dimension must be >= 1 (got {self.p})")
        if len(self.g) != self.m:
            raise DomainError(f"expected {self.m} constraints, got {len(self.g)}")

    # -------------------------------------------------------------------------
    # Evaluasi batch (fallback ke evaluator skalar)
    # -------------------------------------------------------------------------

    def measure_many(self, x: np.ndarray, betas: np.ndarray) -> np.ndarray:
        """F(x_j, beta_j) untuk setiap j, sebagai array kompleks (N, p)."""
        x = np.asarray(x, dtype=float)
        if self.measure_batch is not None:
            return np.asarray(self.measure_batch(x, betas), dtype=complex)
        out = np.empty((x.size, self.p), dtype=complex)
        for j in range(x.size):
            out[j] = self.F(float(x[j]), betas[j]).as_complex()
        return out

    def cost_many(self, x: np.ndarray, betas: np.ndarray) -> np.ndarray:
        """F0(x_j, beta_j) untuk setiap j."""
        x = np.asarray(x, dtype=float)
        if self.cost_batch is not None:
            return np.asarray(self.cost_batch(x, betas), dtype=float)
        return np.array([self.f0(float(x[j]), betas[j]) for j in range(x.size)], dtype=float)

    def lagrangian_many(self, mu: ComplexVec, x: np.ndarray, betas: np.ndarray) -> np.ndarray:
        """F0(x, b) + Re[mu^H F(x, b)] per baris."""
        meas = self.measure_many(x, betas)
        return self.cost_many(x, betas) + meas.real @ mu.re + meas.imag @ mu.im

    def gamma_zero_many(self, mu: ComplexVec, betas: np.ndarray) -> np.ndarray:
        """gamma^(0)(mu, beta) pada banyak titik."""
        return self.lagrangian_many(mu, np.zeros(len(betas)), betas)

    # -------------------------------------------------------------------------
    # Constraint & objective
    # -------------------------------------------------------------------------

    def constraint_values(self, z: ComplexVec, aux: Optional[np.ndarray] = None) -> np.ndarray:
        aux = np.zeros(0) if aux is None else aux
        return np.array([g_i(z, aux) for g_i in self.g], dtype=float)

    def start_point(self) -> DualPoint:
        """Titik awal ascent: initial_point kalau ada, selain itu mu=0, nu=1."""
        if self.initial_point is not None:
            return self.initial_point
        return DualPoint.initial(self.p, self.m)

    def with_lambda(self, lam: float) -> "SfpProblem":
        return replace(self, lam=float(lam))


def gamma_zero(problem: SfpProblem, mu: ComplexVec, beta) -> float:
    """gamma^(0)(mu, beta) = F0(0, beta) + Re[mu^H F(0, beta)]."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    return float(problem.f0(0.0, beta) + mu.inner(problem.F(0.0, beta)))


def weak_duality_witness(problem: SfpProblem, feasible_primal_value: float,
                         dual_value: float, tolerance: float = 0.0) -> bool:
    """True bila nilai dual tidak melebihi nilai primal feasible (dengan toleransi)."""
    if tolerance < 0:
        raise DomainError("tolerance must be nonnegative")
    return bool(dual_value <= feasible_primal_value + tolerance)


def intervals_measure(intervals: Sequence[Tuple[float, float]]) -> float:
    """Total panjang daftar interval disjoint."""
    return float(sum(b - a for a, b in intervals))


def merge_intervals(intervals: Sequence[Tuple[float, float]], gap: float = 0.0) -> List[Tuple[float, float]]:
    """Gabungkan interval yang bersentuhan (jarak <= gap)."""
    merged: List[Tuple[float, float]] = []
    for a, b in sorted(intervals):
        if b <= a:
            continue
        if merged and a <= merged[-1][1] + gap:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged
