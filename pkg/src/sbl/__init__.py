"""Convolution sheaves on the line, action-window invariants and capacities of planar domains."""

from sbl.exact_linalg import F2, QQ, ChainComplex, Field, GradedDims, homology, rank, relative_homology

__all__ = [
    "F2",
    "QQ",
    "ChainComplex",
    "Field",
    "GradedDims",
    "homology",
    "rank",
    "relative_homology",
]

__version__ = "0.1.0"
