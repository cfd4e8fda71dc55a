"""Online Boolean matrix-vector multiplication driven by Hamming spanning trees."""
from __future__ import annotations

__version__ = "0.1.0"

from .bitmatrix import BitMatrix, SparseDelta, delta_cols, from_coords, hamming_cols, naive_mv, transpose
from .dynamic import DynOmv
from .graphapps import DynGraph
from .lapsolve import SolverState, effective_resistance, solve
from .static import QueryStats, StaticOmv, bmm, mv, mv_coltree, mv_rowtree, preprocess
from .synthgen import SynthSpec, generate
from .tree import DeltaTree, build_mst, linearize, tree_weight

__all__ = [
    "BitMatrix", "SparseDelta", "delta_cols", "from_coords", "hamming_cols", "naive_mv", "transpose",
    "DynOmv", "DynGraph", "SolverState", "effective_resistance", "solve",
    "QueryStats", "StaticOmv", "bmm", "mv", "mv_coltree", "mv_rowtree", "preprocess",
    "SynthSpec", "generate", "DeltaTree", "build_mst", "linearize", "tree_weight",
]
