"""
Layanan Kuadratur - Integrasi deterministik dan Monte Carlo atas Omega
Composite midpoint / Gauss-Legendre 5 titik pada partisi sel seragam,
estimasi error delta via perbandingan resolusi setengah (Richardson).
"""

import itertools
from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple, Union

import numpy as np

from core.problem import ComplexVec, Domain
from utils.constants import QUADRATURE_RULES, RULE_ORDER
from utils.errors import DomainError, NonFiniteIntegrandError
from utils.logger import get_logger

logger = get_logger(__name__)

Integrand = Callable[[np.ndarray], Union[float, ComplexVec]]


def reference_rule(rule: str) -> Tuple[np.ndarray, np.ndarray]:
    """Node dan bobot rule pada sel referensi [0, 1]."""
    if rule == "midpoint":
        return np.array([0.5]), np.array([1.0])
    if rule == "gauss5":
        x, w = np.polynomial.legendre.leggauss(5)
        return 0.5 * (x + 1.0), 0.5 * w
    raise DomainError(f"unknown quadrature rule {rule!r}; choose one of {QUADRATURE_RULES}")


def rule_on_intervals(rule: str, a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Terapkan rule pada banyak interval 1-D [a_k, b_k] sekaligus.

    Returns:
        (nodes, weights) flattened, interval-major order
    """
    ref_x, ref_w = reference_rule(rule)
    a = np.asarray(a, dtype=float)[:, None]
    length = np.asarray(b, dtype=float)[:, None] - a
    return (a + length * ref_x).ravel(), (length * ref_w).ravel()


@dataclass(frozen=True, eq=False)
class QuadratureScheme:
    """
    Node, bobot, dan estimasi error delta atas domain.
    cell_of_node[j] adalah indeks sel (flat) tempat node j berada.
    """

    domain: Domain
    cells_per_dim: int
    rule: str
    nodes: np.ndarray
    weights: np.ndarray
    cell_of_node: np.ndarray
    delta: float = 0.0

    @property
    def size(self) -> int:
        return int(self.weights.size)

    @property
    def order(self) -> int:
        return RULE_ORDER[self.rule]

    @property
    def n_cells(self) -> int:
        return self.cells_per_dim ** self.domain.dim

    def cell_edges(self, axis: int = 0) -> np.ndarray:
        """Tepi sel sepanjang satu sumbu."""
        return np.linspace(self.domain.lower[axis], self.domain.upper[axis], self.cells_per_dim + 1)

    def cell_boxes(self) -> Tuple[np.ndarray, np.ndarray]:
        """(lower, upper) tiap sel, bentuk (n_cells, dim), urutan sama dengan cell_of_node."""
        edges = [self.cell_edges(axis) for axis in range(self.domain.dim)]
        idx = np.array(list(itertools.product(range(self.cells_per_dim), repeat=self.domain.dim)))
        lower = np.stack([edges[d][idx[:, d]] for d in range(self.domain.dim)], axis=1)
        upper = np.stack([edges[d][idx[:, d] + 1] for d in range(self.domain.dim)], axis=1)
        return lower, upper

    def coarsened(self) -> "QuadratureScheme":
        """Skema resolusi setengah (minimal satu sel)."""
        return build_composite(self.domain, max(self.cells_per_dim // 2, 1), self.rule)

    def with_delta(self, delta: float) -> "QuadratureScheme":
        return replace(self, delta=float(delta))

    def __repr__(self) -> str:
        return (f"QuadratureScheme({self.rule}, cells={self.cells_per_dim}, "
                f"nodes={self.size}, delta={self.delta:.3g})")


def build_composite(domain: Domain, cells_per_dim: int, rule: str = "gauss5",
                    probe: Optional[Integrand] = None) -> QuadratureScheme:
    """
    Bangun composite rule atas partisi sel seragam (tensor product untuk n-D).

    Args:
        domain: Integration box
        cells_per_dim: Number of cells along every axis (>= 1)
        rule: "midpoint" or "gauss5"
        probe: Integrand used to estimate delta; None gives delta = 0
            (constants are integrated exactly)

    Returns:
        QuadratureScheme
    """
    if cells_per_dim < 1:
        raise DomainError(f"cells_per_dim must be >= 1 (got {cells_per_dim})")
    ref_x, ref_w = reference_rule(rule)
    dim = domain.dim

    axis_nodes = []
    axis_weights = []
    axis_cells = []
    for axis in range(dim):
        edges = np.linspace(domain.lower[axis], domain.upper[axis], cells_per_dim + 1)
        x, w = rule_on_intervals(rule, edges[:-1], edges[1:])
        axis_nodes.append(x)
        axis_weights.append(w)
        axis_cells.append(np.repeat(np.arange(cells_per_dim), ref_x.size))

    if dim == 1:
        nodes = axis_nodes[0][:, None]
        weights = axis_weights[0]
        cell_of_node = axis_cells[0]
    else:
        grids = np.meshgrid(*axis_nodes, indexing="ij")
        wgrids = np.meshgrid(*axis_weights, indexing="ij")
        cgrids = np.meshgrid(*axis_cells, indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=1)
        weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
        cell_multi = np.stack([g.ravel() for g in cgrids], axis=1)
        cell_of_node = np.ravel_multi_index(cell_multi.T, (cells_per_dim,) * dim)

    scheme = QuadratureScheme(domain, int(cells_per_dim), rule, nodes, weights, cell_of_node, 0.0)
    if probe is not None:
        scheme = scheme.with_delta(estimate_delta(scheme, probe))
    return scheme


# =============================================================================
# Integrasi
# =============================================================================

def integrate_values(scheme: QuadratureScheme, values: np.ndarray):
    """
    Jumlah terbobot dari nilai yang sudah dievaluasi di node.

    Args:
        values: (N,) real/complex or (N, p)

    Returns:
        Scalar or (p,) array
    """
    values = np.asarray(values)
    bad = ~np.isfinite(values)
    if bad.ndim > 1:
        bad = bad.any(axis=tuple(range(1, bad.ndim)))
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise NonFiniteIntegrandError(scheme.nodes[j].tolist(), values[j])
    return np.tensordot(scheme.weights, values, axes=(0, 0))


def integrate(scheme: QuadratureScheme, f: Integrand):
    """
    sum_j weights[j] * f(nodes[j]); integrand ComplexVec diintegrasi per komponen.

    Returns:
        float, or ComplexVec for vector integrands
    """
    samples = [f(node) for node in scheme.nodes]
    if samples and isinstance(samples[0], ComplexVec):
        stacked = np.array([s.as_complex() for s in samples])
        return ComplexVec.from_complex(integrate_values(scheme, stacked))
    return float(integrate_values(scheme, np.array(samples, dtype=float)))


def estimate_delta(scheme: QuadratureScheme, f: Integrand) -> float:
    """
    delta = |I_fine - I_coarse| / ((cells/coarse_cells)^order - 1).
    Untuk satu sel, gauss5 dibandingkan dengan midpoint satu sel (dan sebaliknya).
    """
    fine = _as_array(integrate(scheme, f))
    if scheme.cells_per_dim >= 2:
        coarse_scheme = scheme.coarsened()
        ratio = scheme.cells_per_dim / coarse_scheme.cells_per_dim
        factor = ratio ** scheme.order - 1.0
    else:
        other = "midpoint" if scheme.rule == "gauss5" else "gauss5"
        coarse_scheme = build_composite(scheme.domain, 1, other)
        factor = 1.0
    coarse = _as_array(integrate(coarse_scheme, f))
    return float(np.max(np.abs(fine - coarse)) / factor)


def _as_array(value) -> np.ndarray:
    if isinstance(value, ComplexVec):
        return value.as_complex()
    return np.atleast_1d(np.asarray(value))


# =============================================================================
# Monte Carlo
# =============================================================================

@dataclass(frozen=True)
class McSampler:
    """Sampler uniform atas Omega; (seed, call_index) yang sama menghasilkan node yang sama."""

    domain: Domain
    batch_size: int
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise DomainError(f"batch_size must be >= 1 (got {self.batch_size})")

    def draw(self, call_index: int) -> np.ndarray:
        rng = np.random.default_rng([int(self.seed) & 0xFFFFFFFFFFFFFFFF, int(call_index)])
        return rng.uniform(self.domain.lower, self.domain.upper,
                           size=(self.batch_size, self.domain.dim))


def mc_nodes(sampler: McSampler, call_index: int) -> np.ndarray:
    """N titik i.i.d. uniform di Omega, bentuk (N, dim)."""
    return sampler.draw(call_index)
