"""
Core Package
"""

from core.problem import (
    Domain, ComplexVec, DualPoint, PointwiseSet, DzResult, SfpProblem,
    gamma_zero, weak_duality_witness, intervals_measure, merge_intervals,
)
