"""Weighted-reservoir stabilized online learning for sparse linear models."""

__version__ = "0.1.0"

from wrsol._kernels import BACKEND as KERNEL_BACKEND
from wrsol.sparse import Example, SparseVector, WeightVector

__all__ = [
    "Example",
    "KERNEL_BACKEND",
    "SparseVector",
    "WeightVector",
    "__version__",
]
