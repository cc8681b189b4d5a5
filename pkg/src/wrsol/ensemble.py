"""Combining stored snapshots into a single predictor.

Averages over reservoir occupants (simple or survival-weighted), an optional
majority-vote zeroing pass, and the non-reservoir ensemblers used as
baselines: a deterministic top-K survival tracker, a sliding-window mean,
and an exponential running average.
"""

from __future__ import annotations

import heapq
from collections import deque

import numpy as np

from wrsol.reservoir import SCHEMES, Reservoir
from wrsol.sparse import WeightVector


def _mean(ws: list[WeightVector]) -> WeightVector:
    if not ws:
        raise ValueError("nothing to average")
    dim = max(w.dim for w in ws)
    out = WeightVector(dim)
    acc = out.data
    for w in ws:
        acc[: w.dim] += w.data
    acc /= len(ws)
    return out


def _scheme_weights(survivals: list[int], scheme: str) -> np.ndarray:
    arr = np.asarray(survivals, dtype=np.float64)
    if scheme == "standard":
        return arr
    if scheme == "exponential":
        # normalize so the largest weight is 1; ratios are preserved and
        # nothing overflows for large survival counts
        return np.exp(arr - arr.max())
    raise ValueError("unknown weighting scheme %r" % scheme)


def _weighted_mean(
    ws: list[WeightVector], survivals: list[int], scheme: str
) -> WeightVector:
    weights = _scheme_weights(survivals, scheme)
    total = float(weights.sum())
    if total == 0.0 or bool(np.all(weights == weights[0])):
        return _mean(ws)
    dim = max(w.dim for w in ws)
    out = WeightVector(dim)
    acc = out.data
    for w, b in zip(ws, weights):
        if b != 0.0:
            acc[: w.dim] += b * w.data
    acc /= total
    return out


def simple_average(reservoir: Reservoir) -> WeightVector:
    """Plain mean of the occupants. Raises on an empty reservoir."""
    return _mean([c.w for c in reservoir.slots])


def weighted_average(reservoir: Reservoir) -> WeightVector:
    """Survival-weighted mean of the occupants.

    Weights follow the reservoir's scheme. Equal weights (including the
    all-zero-survival case) fall back to the simple average, bit for bit.
    """
    slots = reservoir.slots
    if not slots:
        raise ValueError("nothing to average")
    return _weighted_mean(
        [c.w for c in slots], [c.survival for c in slots], reservoir.scheme
    )


def voting_zero(w_avg: WeightVector, reservoir: Reservoir) -> WeightVector:
    """Zero every coordinate where a strict majority of occupants is exactly 0.

    Pure: returns a new vector, leaving w_avg and the reservoir untouched.
    Coordinates past an occupant's extent count as zeros for that occupant.
    """
    slots = reservoir.slots
    if not slots:
        raise ValueError("reservoir is empty")
    out = w_avg.copy()
    dim = out.dim
    if dim == 0:
        return out
    zeros = np.zeros(dim, dtype=np.int64)
    for c in slots:
        m = min(c.w.dim, dim)
        zeros[:m] += c.w.data[:m] == 0.0
        zeros[m:] += 1
    out.data[2 * zeros > len(slots)] = 0.0
    return out


class TopKSurvivalTracker:
    """Keeps the K snapshots with the largest survival counts, no randomness.

    Boundary ties are resolved by birth timestep: the earlier snapshot stays.
    """

    def __init__(self, capacity: int, scheme: str = "standard"):
        if capacity < 1:
            raise ValueError("capacity must be a positive integer")
        if scheme not in SCHEMES:
            raise ValueError("unknown weighting scheme %r" % scheme)
        self.capacity = int(capacity)
        self.scheme = scheme
        self._heap: list[tuple[int, int, int, WeightVector]] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._heap)

    def offer(self, w: WeightVector, survival: int, birth: int) -> bool:
        if survival < 0:
            raise ValueError("survival must be non-negative")
        key = (int(survival), -int(birth))
        if len(self._heap) < self.capacity:
            heapq.heappush(self._heap, key + (self._seq, w.copy()))
            self._seq += 1
            return True
        weakest = self._heap[0]
        if key <= weakest[:2]:
            return False
        heapq.heapreplace(self._heap, key + (self._seq, w.copy()))
        self._seq += 1
        return True

    def average(self, averaging: str = "simple") -> WeightVector:
        if not self._heap:
            raise ValueError("nothing to average")
        ws = [entry[3] for entry in self._heap]
        if averaging == "simple":
            return _mean(ws)
        if averaging == "weighted":
            return _weighted_mean(ws, [entry[0] for entry in self._heap], self.scheme)
        raise ValueError("averaging must be 'simple' or 'weighted'")


class MovingAverageEnsemble:
    """Mean of the last `window` weight vectors pushed."""

    def __init__(self, window: int):
        if window < 1:
            raise ValueError("window must be a positive integer")
        self.window = int(window)
        self._buf: deque[WeightVector] = deque(maxlen=window)

    def __len__(self) -> int:
        return len(self._buf)

    def push(self, w: WeightVector) -> None:
        self._buf.append(w.copy())

    def average(self) -> WeightVector:
        if not self._buf:
            raise ValueError("nothing to average")
        return _mean(list(self._buf))


class ExponentialAverageEnsemble:
    """Running average bar = gamma * w + (1 - gamma) * bar, starting from 0."""

    def __init__(self, gamma: float):
        if not 0.0 < gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        self.gamma = float(gamma)
        self._bar = WeightVector(0)
        self._count = 0

    def __len__(self) -> int:
        return self._count

    def push(self, w: WeightVector) -> None:
        self._count += 1
        if self.gamma == 1.0:
            self._bar = w.copy()
            return
        bar = self._bar
        bar.ensure_dim(w.dim)
        d = bar.data
        d *= 1.0 - self.gamma
        d[: w.dim] += self.gamma * w.data

    def average(self) -> WeightVector:
        if self._count == 0:
            raise ValueError("nothing to average")
        return self._bar.copy()
