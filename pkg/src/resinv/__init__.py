"""Deterministic barrier-potential column selection with checkable certificates."""

__version__ = "0.1.0"

from resinv.barrier import DiagonalWeights, SelectionCertificate, kt_select, ri_select
from resinv.certify import oracle_best_subset_norm, oracle_best_subset_smin, verify_kt, verify_ri
from resinv.factorize import cube_basis, dr_nonsymmetric, dr_symmetric, optimize_eps
from resinv.john import JohnDecomposition, PointSet, mvee, validate_decomposition, whiten_decomposition

__all__ = [
    "DiagonalWeights",
    "JohnDecomposition",
    "PointSet",
    "SelectionCertificate",
    "cube_basis",
    "dr_nonsymmetric",
    "dr_symmetric",
    "kt_select",
    "mvee",
    "optimize_eps",
    "oracle_best_subset_norm",
    "oracle_best_subset_smin",
    "ri_select",
    "validate_decomposition",
    "verify_kt",
    "verify_ri",
    "whiten_decomposition",
]
