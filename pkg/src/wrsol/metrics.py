"""Evaluation metrics.

Holdout accuracy (a zero margin counts as a miss), weight sparsity, the
running-best oracle curve with its mean regret, and a paired Wilcoxon
signed-rank test that is exact for small samples and uses the tie-corrected
normal approximation for larger ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from wrsol import _kernels
from wrsol.sparse import Example, WeightVector

WILCOXON_EXACT_MAX = 15
WILCOXON_MIN_PAIRS = 5


class AccuracyCurve:
    """Accuracy at strictly increasing checkpoint timesteps."""

    __slots__ = ("timesteps", "accuracies")

    def __init__(self, timesteps, accuracies):
        ts = np.ascontiguousarray(timesteps, dtype=np.int64)
        acc = np.ascontiguousarray(accuracies, dtype=np.float64)
        if ts.ndim != 1 or acc.ndim != 1 or ts.shape[0] != acc.shape[0]:
            raise ValueError("timesteps and accuracies must be 1-d, equal length")
        if ts.shape[0] == 0:
            raise ValueError("curve must have at least one checkpoint")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("timesteps must be strictly increasing")
        if np.any((acc < 0.0) | (acc > 1.0)):
            raise ValueError("accuracies must lie in [0, 1]")
        ts.setflags(write=False)
        acc.setflags(write=False)
        self.timesteps = ts
        self.accuracies = acc

    def __len__(self) -> int:
        return int(self.timesteps.shape[0])


class TestSetEvaluator:
    """Holdout set packed into CSR arrays for repeated accuracy evaluation."""

    def __init__(self, examples: Sequence[Example]):
        if len(examples) == 0:
            raise ValueError("empty evaluation set")
        indptr = np.zeros(len(examples) + 1, dtype=np.int64)
        labels = np.empty(len(examples), dtype=np.float64)
        chunks_i = []
        chunks_v = []
        for r, (x, y) in enumerate(examples):
            indptr[r + 1] = indptr[r] + x.nnz
            labels[r] = float(y)
            chunks_i.append(x.indices)
            chunks_v.append(x.values)
        self.indptr = indptr
        self.indices = (
            np.concatenate(chunks_i) if chunks_i else np.empty(0, dtype=np.int64)
        )
        self.values = (
            np.concatenate(chunks_v) if chunks_v else np.empty(0, dtype=np.float64)
        )
        self.labels = labels

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def accuracy(self, w: WeightVector) -> float:
        return float(
            _kernels.eval_accuracy_csr(
                w.data, self.indptr, self.indices, self.values, self.labels
            )
        )


def accuracy(w: WeightVector, examples: Sequence[Example]) -> float:
    """Fraction of examples with y * (w . x) strictly positive."""
    return TestSetEvaluator(examples).accuracy(w)


def sparsity(w: WeightVector, dim: int) -> float:
    """Fraction of the dim coordinates that are exactly zero."""
    if dim <= 0:
        raise ValueError("dim must be positive")
    if dim < w.dim:
        raise ValueError("dim smaller than the touched extent of w")
    return (dim - w.nnz()) / dim


def oracle_curve(curve: AccuracyCurve) -> AccuracyCurve:
    """Running best-so-far of a curve: what hindsight snapshot picking gives."""
    return AccuracyCurve(curve.timesteps, np.maximum.accumulate(curve.accuracies))


def rop(oracle: AccuracyCurve, model: AccuracyCurve) -> float:
    """Mean (oracle - model) accuracy over matching checkpoints."""
    if not np.array_equal(oracle.timesteps, model.timesteps):
        raise ValueError("curves have mismatched checkpoint timesteps")
    return float(np.mean(oracle.accuracies - model.accuracies))


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    n: int
    method: str


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0], dtype=np.float64)
    i = 0
    n = values.shape[0]
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * ((i + 1) + (j + 1))
        i = j + 1
    return ranks


def _exact_two_sided_p(ranks2: np.ndarray, w2: int) -> float:
    """Two-sided tail mass of the signed-rank statistic, in doubled-rank units.

    Enumerates the distribution of the positive-rank sum over all 2^n sign
    assignments by subset-sum counting over the doubled (integer) ranks.
    """
    total2 = int(ranks2.sum())
    counts = np.zeros(total2 + 1, dtype=np.int64)
    counts[0] = 1
    for r in ranks2:
        r = int(r)
        counts[r:] = counts[r:] + counts[:-r]
    mu2 = total2 // 2
    dev = abs(w2 - mu2)
    support = np.abs(np.arange(total2 + 1) - mu2) >= dev
    return float(counts[support].sum() / counts.sum())


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> WilcoxonResult:
    """Two-sided paired signed-rank test on pairs (a_i, b_i).

    Zero differences are dropped; ties share midranks. With 15 or fewer
    usable pairs the exact sign-flip distribution is enumerated; above that
    the normal approximation with tie-corrected variance is used. Fewer than
    5 usable pairs is an error.
    """
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.ndim != 1 or av.shape != bv.shape:
        raise ValueError("a and b must be 1-d and the same length")
    d = av - bv
    d = d[d != 0.0]
    n = int(d.shape[0])
    if n < WILCOXON_MIN_PAIRS:
        raise ValueError(
            "need at least %d nonzero differences, got %d"
            % (WILCOXON_MIN_PAIRS, n)
        )
    absd = np.abs(d)
    ranks = _midranks(absd)
    w_plus = float(ranks[d > 0.0].sum())
    total = float(ranks.sum())
    statistic = min(w_plus, total - w_plus)
    if n <= WILCOXON_EXACT_MAX:
        ranks2 = np.rint(2.0 * ranks).astype(np.int64)
        w2 = int(round(2.0 * w_plus))
        p = _exact_two_sided_p(ranks2, w2)
        return WilcoxonResult(statistic, p, n, "exact")
    mu = n * (n + 1) / 4.0
    _, tie_counts = np.unique(absd, return_counts=True)
    tie_term = float(np.sum(tie_counts.astype(np.float64) ** 3 - tie_counts))
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0
    z = (w_plus - mu) / math.sqrt(var)
    p = min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))
    return WilcoxonResult(statistic, p, n, "normal")
