"""Sparse feature vectors, growable weight vectors, and hinge primitives.

SparseVector is an immutable (index, value) pair list with sorted unique
indices and no explicit zeros. WeightVector is a dense float64 buffer that
grows on demand; reads past the touched extent are 0. WeightVector keeps a
class-level count of live instances so tests can bound how many full-size
copies a training run holds at once.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple

import numpy as np

from wrsol import _kernels


class SparseVector:
    """Immutable sparse vector over non-negative integer feature indices."""

    __slots__ = ("indices", "values")

    def __init__(self, indices, values):
        idx = np.ascontiguousarray(indices, dtype=np.int64)
        val = np.ascontiguousarray(values, dtype=np.float64)
        if idx.ndim != 1 or val.ndim != 1 or idx.shape[0] != val.shape[0]:
            raise ValueError("indices and values must be 1-d and equal length")
        if idx.shape[0] > 0:
            if idx[0] < 0:
                raise ValueError("feature indices must be non-negative")
            if np.any(np.diff(idx) <= 0):
                raise ValueError("feature indices must be strictly increasing")
            if np.any(val == 0.0):
                raise ValueError("explicit zero values are not stored")
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    def __setattr__(self, name, value):
        raise AttributeError("SparseVector is immutable")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]]) -> "SparseVector":
        pairs = list(pairs)
        if not pairs:
            return cls([], [])
        return cls([p[0] for p in pairs], [p[1] for p in pairs])

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    @property
    def max_index(self) -> int:
        """Largest feature index, or -1 for the empty vector."""
        if self.indices.shape[0] == 0:
            return -1
        return int(self.indices[-1])

    def to_dense(self, dim: int) -> np.ndarray:
        if dim <= self.max_index:
            raise ValueError("dim smaller than max feature index + 1")
        out = np.zeros(dim, dtype=np.float64)
        out[self.indices] = self.values
        return out

    def __repr__(self):
        return "SparseVector(nnz=%d, max_index=%d)" % (self.nnz, self.max_index)


class Example(NamedTuple):
    x: SparseVector
    y: int


class WeightVector:
    """Growable dense weight vector.

    Coordinates past the touched extent read as 0. Growth reallocates with
    headroom and never changes stored coefficients. The class attributes
    live_count / peak_count track how many instances exist right now and the
    high-water mark since the last reset_peak().
    """

    __slots__ = ("_buf", "_dim")

    _live = 0
    _peak = 0

    def __init__(self, dim: int = 0):
        if dim < 0:
            raise ValueError("dim must be non-negative")
        self._buf = np.zeros(dim, dtype=np.float64)
        self._dim = int(dim)
        WeightVector._live += 1
        if WeightVector._live > WeightVector._peak:
            WeightVector._peak = WeightVector._live

    def __del__(self):
        try:
            WeightVector._live -= 1
        except Exception:
            pass

    @classmethod
    def live_count(cls) -> int:
        return cls._live

    @classmethod
    def peak_count(cls) -> int:
        return cls._peak

    @classmethod
    def reset_peak(cls) -> None:
        cls._peak = cls._live

    @property
    def dim(self) -> int:
        """Touched extent: one past the largest index ever written."""
        return self._dim

    @property
    def data(self) -> np.ndarray:
        """Writable view of the touched extent."""
        return self._buf[: self._dim]

    def ensure_dim(self, dim: int) -> None:
        if dim <= self._dim:
            return
        if dim > self._buf.shape[0]:
            cap = max(2 * self._buf.shape[0], dim, 8)
            buf = np.zeros(cap, dtype=np.float64)
            buf[: self._dim] = self._buf[: self._dim]
            self._buf = buf
        self._dim = dim

    def __getitem__(self, i: int) -> float:
        if i < 0:
            raise IndexError("negative index")
        if i >= self._dim:
            return 0.0
        return float(self._buf[i])

    def __len__(self) -> int:
        return self._dim

    def copy(self) -> "WeightVector":
        out = WeightVector(0)
        out._buf = self._buf[: self._dim].copy()
        out._dim = self._dim
        return out

    def nnz(self) -> int:
        return int(np.count_nonzero(self._buf[: self._dim]))

    def to_dense(self, dim: int) -> np.ndarray:
        if dim < self._dim:
            raise ValueError("dim smaller than touched extent")
        out = np.zeros(dim, dtype=np.float64)
        out[: self._dim] = self._buf[: self._dim]
        return out

    def __repr__(self):
        return "WeightVector(dim=%d, nnz=%d)" % (self._dim, self.nnz())


def dot(w: WeightVector, x: SparseVector) -> float:
    """Inner product w . x. Coordinates beyond w's extent contribute 0."""
    return _kernels.dot(w.data, x.indices, x.values)


def sq_norm(x: SparseVector) -> float:
    """Squared Euclidean norm of a sparse vector."""
    return float(np.dot(x.values, x.values))


def hinge_loss(w: WeightVector, x: SparseVector, y: int) -> float:
    """max(0, 1 - y * (w . x))."""
    return max(0.0, 1.0 - y * dot(w, x))


def axpy_sparse(w: WeightVector, alpha: float, x: SparseVector) -> None:
    """In-place w += alpha * x, growing w to cover x's indices."""
    if x.nnz == 0:
        return
    w.ensure_dim(x.max_index + 1)
    _kernels.axpy(w.data, alpha, x.indices, x.values)
