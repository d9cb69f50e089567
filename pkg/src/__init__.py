"""
Package Solver Sparse Functional Programs
"""

__version__ = "1.0.0"
__author__ = "SfpSolver"
