"""Spectra of the form Laplacian on warped-product metrics of the unit ball,
through its reduced one-dimensional operators."""

from .metric import ArclengthMap, MetricProfile, WarpParams, arclength, build_profile
from .sphere_modes import SphereMode, coclosed_eigenvalues, closed_eigenvalues, lambda_bar
from .reduction import Kind, ReducedOperator, assemble_type3, reduced_operator

__all__ = [
    "ArclengthMap", "MetricProfile", "WarpParams", "arclength", "build_profile",
    "SphereMode", "coclosed_eigenvalues", "closed_eigenvalues", "lambda_bar",
    "Kind", "ReducedOperator", "assemble_type3", "reduced_operator",
]

__version__ = "0.1.0"
