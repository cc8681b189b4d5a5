"""Dataset loading, stats, splitting, and synthetic stream generation.

The on-disk format is the plain text sparse format: one example per line,
label first, then index:value pairs with 1-based strictly increasing
indices. Labels +1/1 map to +1 and -1/0 map to -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from wrsol.sparse import Example, SparseVector

_LABEL_MAP = {"+1": 1, "1": 1, "-1": -1, "0": -1}


class ParseError(ValueError):
    """Malformed dataset line; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__("line %d: %s" % (line_no, message))
        self.line_no = line_no


def parse_line(line: str, line_no: int = 1) -> Example:
    """Parse one example line into (SparseVector, label)."""
    tokens = line.split()
    if not tokens:
        raise ParseError(line_no, "empty example line")
    label = _LABEL_MAP.get(tokens[0])
    if label is None:
        raise ParseError(line_no, "unparseable label %r" % tokens[0])
    indices: list[int] = []
    values: list[float] = []
    prev = 0
    for tok in tokens[1:]:
        col, sep, raw = tok.partition(":")
        if not sep:
            raise ParseError(line_no, "malformed token %r" % tok)
        try:
            idx = int(col)
            val = float(raw)
        except ValueError:
            raise ParseError(line_no, "malformed token %r" % tok) from None
        if idx < 1:
            raise ParseError(line_no, "index %d is not 1-based positive" % idx)
        if idx <= prev:
            raise ParseError(
                line_no, "index %d not strictly increasing after %d" % (idx, prev)
            )
        if not math.isfinite(val):
            raise ParseError(line_no, "non-finite value in token %r" % tok)
        prev = idx
        if val == 0.0:
            continue
        indices.append(idx - 1)
        values.append(val)
    return Example(SparseVector(indices, values), label)


def iter_examples(path: str) -> Iterator[Example]:
    """Stream examples from a file, skipping blank lines."""
    with open(path, "r", encoding="ascii", errors="strict") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            yield parse_line(line, line_no)


def load_examples(path: str) -> list[Example]:
    return list(iter_examples(path))


def write_examples(examples: Iterable[Example], path: str) -> None:
    """Write examples in the same 1-based text format."""
    with open(path, "w", encoding="ascii") as fh:
        for x, y in examples:
            parts = ["+1" if y > 0 else "-1"]
            for i, v in zip(x.indices, x.values):
                parts.append("%d:%s" % (i + 1, repr(float(v))))
            fh.write(" ".join(parts) + "\n")


@dataclass(frozen=True)
class DatasetStats:
    n_examples: int
    dim: int
    max_index: int
    n_nonzeros: int
    sparsity: float


def compute_stats(
    examples: Sequence[Example], declared_dim: int | None = None
) -> DatasetStats:
    """Dataset-level counts and the fraction of zero entries.

    dim is declared_dim when given, else max feature index + 1.
    """
    if len(examples) == 0:
        raise ValueError("empty dataset")
    max_index = -1
    nnz = 0
    for x, _ in examples:
        nnz += x.nnz
        if x.max_index > max_index:
            max_index = x.max_index
    dim = max_index + 1 if declared_dim is None else int(declared_dim)
    if dim < max_index + 1:
        raise ValueError(
            "declared dim %d smaller than max index + 1 (%d)" % (dim, max_index + 1)
        )
    if dim <= 0:
        raise ValueError("dataset has no features and no declared dim")
    total = len(examples) * dim
    return DatasetStats(
        n_examples=len(examples),
        dim=dim,
        max_index=max_index,
        n_nonzeros=nnz,
        sparsity=1.0 - nnz / total,
    )


def split_examples(
    examples: Sequence[Example], train_fraction: float, seed: int
) -> tuple[list[Example], list[Example]]:
    """Seeded shuffle then split: first floor(fraction * N) go to train."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    n = len(examples)
    if n < 2:
        raise ValueError("need at least 2 examples to split")
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(math.floor(train_fraction * n))
    train = [examples[i] for i in order[:n_train]]
    test = [examples[i] for i in order[n_train:]]
    return train, test


@dataclass(frozen=True)
class SyntheticStream:
    """A generated stream plus the ground truth behind it."""

    examples: list[Example]
    clean_labels: np.ndarray
    oracle: np.ndarray
    flip_prob: float
    margin: float


def synth_noisy_stream(
    dim: int,
    n: int,
    flip_prob: float,
    margin: float = 0.1,
    seed: int = 0,
    density: float = 0.1,
) -> SyntheticStream:
    """Linearly separable sparse stream with label noise.

    A hidden unit vector labels examples whose margin magnitude is at least
    `margin` (smaller draws are rejected); each label then flips with
    probability flip_prob. Deterministic for a given seed.
    """
    if dim < 2:
        raise ValueError("dim must be at least 2")
    if not 0.0 <= flip_prob < 0.5:
        raise ValueError("flip_prob must be in [0, 0.5)")
    if n < 1:
        raise ValueError("n must be positive")
    if margin < 0.0:
        raise ValueError("margin must be non-negative")
    if not 0.0 < density <= 1.0:
        raise ValueError("density must be in (0, 1]")
    rng = np.random.default_rng(seed)
    oracle = rng.standard_normal(dim)
    oracle /= np.linalg.norm(oracle)
    nnz = max(1, int(round(density * dim)))
    examples: list[Example] = []
    clean = np.empty(n, dtype=np.int64)
    for i in range(n):
        while True:
            idx = np.sort(rng.choice(dim, size=nnz, replace=False))
            val = rng.standard_normal(nnz)
            val[val == 0.0] = 1.0
            score = float(np.dot(oracle[idx], val))
            if abs(score) >= margin:
                break
        y = 1 if score > 0 else -1
        clean[i] = y
        if flip_prob > 0.0 and rng.random() < flip_prob:
            y = -y
        examples.append(Example(SparseVector(idx, val), y))
    return SyntheticStream(
        examples=examples,
        clean_labels=clean,
        oracle=oracle,
        flip_prob=flip_prob,
        margin=margin,
    )
