"""Weighted reservoir sampling over weight-vector snapshots.

Each offered snapshot draws one uniform u and receives the key u^(1/(b+eps))
where b is its sampling weight. The reservoir keeps the capacity largest
keys. Keys are stored in the log domain: the standard scheme uses
log(u) / (s + eps) and the exponential scheme uses log(u) * exp(-s), which
is the same ordering without overflowing for large survival counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from wrsol.sparse import WeightVector

EPSILON = 1e-8

SCHEMES = ("standard", "exponential")

_TINY_U = float(np.nextafter(0.0, 1.0))


def wrs_weight(survival: int, scheme: str) -> float:
    """Sampling weight for a survival count: s, or e^s for the exponential scheme."""
    if survival < 0:
        raise ValueError("survival must be non-negative")
    if scheme == "standard":
        return float(survival)
    if scheme == "exponential":
        if survival > 709:
            return math.inf
        return math.exp(survival)
    raise ValueError("unknown weighting scheme %r" % scheme)


def wrs_log_key(b: float, u: float) -> float:
    """log of the sampling key u^(1/(b+eps)) for weight b and uniform draw u."""
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie strictly inside (0, 1)")
    if b < 0.0:
        raise ValueError("weight must be non-negative")
    return math.log(u) / (b + EPSILON)


def _survival_log_key(survival: int, scheme: str, u: float) -> float:
    if scheme == "standard":
        return wrs_log_key(float(survival), u)
    if scheme == "exponential":
        if not 0.0 < u < 1.0:
            raise ValueError("u must lie strictly inside (0, 1)")
        return math.log(u) * math.exp(-float(survival))
    raise ValueError("unknown weighting scheme %r" % scheme)


@dataclass
class Candidate:
    """A stored snapshot with its sampling bookkeeping."""

    w: WeightVector
    survival: int
    weight: float
    log_key: float
    birth: int


class Reservoir:
    """Fixed-capacity reservoir holding the largest-key candidates seen."""

    def __init__(self, capacity: int, scheme: str = "standard"):
        if capacity < 1:
            raise ValueError("capacity must be a positive integer")
        if scheme not in SCHEMES:
            raise ValueError("unknown weighting scheme %r" % scheme)
        self.capacity = int(capacity)
        self.scheme = scheme
        self.slots: list[Candidate] = []
        self.total_offers = 0
        self.total_inserts = 0

    def __len__(self) -> int:
        return len(self.slots)

    @property
    def is_full(self) -> bool:
        return len(self.slots) >= self.capacity

    def min_key_slot(self) -> tuple[int, float]:
        """Index and log key of the current threshold slot (ties: lowest index)."""
        if not self.slots:
            raise ValueError("reservoir is empty")
        best = 0
        best_key = self.slots[0].log_key
        for i in range(1, len(self.slots)):
            if self.slots[i].log_key < best_key:
                best = i
                best_key = self.slots[i].log_key
        return best, best_key

    def offer(
        self, w: WeightVector, survival: int, birth: int, rng: np.random.Generator
    ) -> bool:
        """Offer a snapshot; draws exactly one uniform. Copies w only on insert."""
        if survival < 0:
            raise ValueError("survival must be non-negative")
        self.total_offers += 1
        u = float(rng.random())
        if u <= 0.0:
            u = _TINY_U
        log_key = _survival_log_key(survival, self.scheme, u)
        if self.is_full:
            slot, threshold = self.min_key_slot()
            if not log_key > threshold:
                return False
        else:
            slot = len(self.slots)
            self.slots.append(None)  # type: ignore[list-item]
        self.slots[slot] = Candidate(
            w=w.copy(),
            survival=int(survival),
            weight=wrs_weight(survival, self.scheme),
            log_key=log_key,
            birth=int(birth),
        )
        self.total_inserts += 1
        return True

    def dump(self) -> list[dict]:
        """JSON-friendly view of the occupied slots."""
        return [
            {
                "slot": i,
                "birth_timestep": c.birth,
                "survival": c.survival,
                "weight": c.weight,
                "log_key": c.log_key,
                "nnz": c.w.nnz(),
            }
            for i, c in enumerate(self.slots)
        ]
