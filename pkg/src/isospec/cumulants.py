"""Set partitions and the moment/cumulant conversions they index.

Subsets and blocks use 0-based variable indices. Cumulants are multilinear over
complex values with no implicit conjugation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Partition",
    "JointSample",
    "partitions",
    "partition_coefficient",
    "cumulant_from_moments",
    "moment_from_cumulants",
    "sample_joint_cumulant",
    "MAX_PARTITION_N",
    "MAX_SAMPLE_ORDER",
]

MAX_PARTITION_N = 8
MAX_SAMPLE_ORDER = 6


@dataclass(frozen=True)
class Partition:
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen = [i for b in self.blocks for i in b]
        if any(len(b) == 0 for b in self.blocks):
            raise ValueError("blocks must be nonempty")
        if sorted(seen) != list(range(len(seen))):
            raise ValueError("blocks must be disjoint and cover 0..n-1")

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def indicator(self) -> np.ndarray:
        """Block-by-variable 0/1 matrix."""
        u = np.zeros((len(self.blocks), self.n), dtype=int)
        for j, b in enumerate(self.blocks):
            u[j, list(b)] = 1
        return u


def _set_partitions(items: list[int]) -> Iterable[list[list[int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in _set_partitions(rest):
        yield [[first]] + p
        for i in range(len(p)):
            yield p[:i] + [[first] + p[i]] + p[i + 1 :]


@lru_cache(maxsize=None)
def _partitions_cached(n: int) -> tuple[Partition, ...]:
    out = []
    for p in _set_partitions(list(range(n))):
        blocks = sorted(tuple(sorted(b)) for b in p)
        out.append(tuple(blocks))

    def key(blocks):
        # block count first, then indicator rows read as binary words
        rows = tuple(tuple(int(i in b) for i in range(n)) for b in blocks)
        return (len(blocks), rows)

    out.sort(key=key)
    return tuple(Partition(b) for b in out)


def partitions(n: int) -> list[Partition]:
    """All set partitions of ``0..n-1``, ordered by block count then by indicator rows."""
    if int(n) != n or not 1 <= n <= MAX_PARTITION_N:
        raise ValueError(f"n must be an integer in [1, {MAX_PARTITION_N}]")
    return list(_partitions_cached(int(n)))


def partition_coefficient(k: int) -> int:
    """``(-1)^(k-1) (k-1)!`` for a partition with ``k`` blocks."""
    return (-1) ** (k - 1) * math.factorial(k - 1)


def _lookup(table: Mapping, block: tuple[int, ...], what: str):
    key = frozenset(block)
    try:
        return table[key]
    except KeyError:
        pass
    try:
        return table[tuple(sorted(block))]
    except KeyError:
        raise KeyError(f"missing {what} for subset {tuple(sorted(block))}") from None


def cumulant_from_moments(moments: Mapping, n: int) -> complex:
    """Joint cumulant of ``n`` variables from the moments of every nonempty subset.

    ``moments`` is keyed by ``frozenset`` or sorted tuple of 0-based indices.
    """
    total = 0.0
    for p in partitions(n):
        prod = 1.0
        for b in p.blocks:
            prod = prod * _lookup(moments, b, "moment")
        total = total + partition_coefficient(len(p)) * prod
    return total


def moment_from_cumulants(cumulants: Mapping, n: int) -> complex:
    """Joint moment of ``n`` variables as the sum over partitions of block-cumulant products."""
    total = 0.0
    for p in partitions(n):
        prod = 1.0
        for b in p.blocks:
            prod = prod * _lookup(cumulants, b, "cumulant")
        total = total + prod
    return total


@dataclass(frozen=True)
class JointSample:
    """``N x p`` matrix of replicate rows."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.ndim != 2 or v.shape[0] < 2:
            raise ValueError("need an N x p matrix with N >= 2")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample entries must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_reps(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]


def sample_joint_cumulant(s: JointSample, indices: Sequence[int]) -> complex:
    """Plug-in joint cumulant of the columns named in ``indices`` (a multiset)."""
    idx = sorted(int(i) for i in indices)
    p = len(idx)
    if not 1 <= p <= MAX_SAMPLE_ORDER:
        raise ValueError(f"order must lie in [1, {MAX_SAMPLE_ORDER}]")
    if any(i < 0 or i >= s.n_vars for i in idx):
        raise IndexError("column index out of range")
    if s.n_reps <= p:
        raise ValueError(f"need more than {p} replicates, got {s.n_reps}")
    # sorting makes the result bitwise invariant under permutations of ``indices``
    cols = s.values[:, idx]
    moments = {}
    for mask in range(1, 1 << p):
        sub = tuple(j for j in range(p) if mask >> j & 1)
        moments[frozenset(sub)] = np.prod(cols[:, sub], axis=1).mean()
    return complex(cumulant_from_moments(moments, p))
