"""
Services Package
"""

from services.scalar_service import ScalarResult, solve_generic
from services.quadrature_service import QuadratureScheme, McSampler, build_composite
from services.dual_service import DualEngine, PrimalSolution, SolveReport
from services.export_service import ExportService
