"""Projected shrinkage solvers for box-constrained l1-minimization."""

__version__ = "0.1.0"
