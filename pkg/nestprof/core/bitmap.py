# nestprof/core/bitmap.py
# Compressed symmetric document-pair matrices backed by roaring bitmaps.
from __future__ import annotations

from math import isqrt
from typing import Iterable, Iterator, Sequence, Tuple

import numpy as np
from roaringbitmap import RoaringBitmap

from nestprof.exceptions import ResourceLimitError

# roaring bitmaps hold 32-bit unsigned integers
MAX_PAIR_INDEX = 2**32 - 1

Pair = Tuple[int, int]


def pair_index(i: int, j: int) -> int:
    """Dense index of the unordered pair of 1-based document ids ``i`` and ``j``."""
    lo, hi = (i, j) if i < j else (j, i)
    if lo == hi:
        raise ValueError(f"self-pair ({i}, {j}) has no index")
    if lo < 1:
        raise ValueError(f"document ids start at 1, got {lo}")
    return (hi - 1) * (hi - 2) // 2 + (lo - 1)


def pair_from_index(index: int) -> Pair:
    if index < 0:
        raise ValueError(f"negative pair index {index}")
    # largest t with t(t-1)/2 <= index
    t = (1 + isqrt(1 + 8 * index)) // 2
    j = t + 1
    i = index - t * (t - 1) // 2 + 1
    return i, j


def max_documents() -> int:
    n = (1 + isqrt(1 + 8 * MAX_PAIR_INDEX)) // 2
    while pair_index(n, n + 1) > MAX_PAIR_INDEX:
        n -= 1
    return n + 1


def clique_indices(doc_ids: Iterable[int]) -> np.ndarray:
    """Pair indices of every pair drawn from one group of documents."""
    ids = np.fromiter(sorted(doc_ids), dtype=np.int64)
    if ids.size < 2:
        return np.empty(0, dtype=np.int64)
    left, right = np.triu_indices(ids.size, k=1)
    lo, hi = ids[left], ids[right]
    indices = (hi - 1) * (hi - 2) // 2 + (lo - 1)
    if indices.size and int(indices.max()) > MAX_PAIR_INDEX:
        raise ResourceLimitError(f"document ids beyond {max_documents()} do not fit a 32-bit pair bitmap")
    return indices


class PairBitmap:
    """Set of unordered distinct document pairs, stored by pair index."""

    __slots__ = ("bits",)

    def __init__(self, bits: RoaringBitmap = None):
        self.bits = bits if bits is not None else RoaringBitmap()

    @classmethod
    def from_pairs(cls, pairs: Iterable[Pair]) -> "PairBitmap":
        return cls(RoaringBitmap(pair_index(i, j) for i, j in pairs))

    @classmethod
    def from_indices(cls, indices: Iterable[int]) -> "PairBitmap":
        return cls(RoaringBitmap(indices))

    @classmethod
    def from_cliques(cls, groups: Iterable[Iterable[int]]) -> "PairBitmap":
        """Every pair that shares at least one group."""
        chunks = [indices for indices in map(clique_indices, groups) if indices.size]
        if not chunks:
            return cls()
        return cls(RoaringBitmap(np.unique(np.concatenate(chunks)).tolist()))

    @classmethod
    def intersection(cls, bitmaps: Sequence["PairBitmap"]) -> "PairBitmap":
        if not bitmaps:
            raise ValueError("intersection of no bitmaps")
        bits = bitmaps[0].bits
        for other in bitmaps[1:]:
            bits = bits & other.bits
        return cls(bits)

    def __contains__(self, pair: Pair) -> bool:
        i, j = pair
        return i != j and pair_index(i, j) in self.bits

    def __and__(self, other: "PairBitmap") -> "PairBitmap":
        return PairBitmap(self.bits & other.bits)

    def __or__(self, other: "PairBitmap") -> "PairBitmap":
        return PairBitmap(self.bits | other.bits)

    def __sub__(self, other: "PairBitmap") -> "PairBitmap":
        return PairBitmap(self.bits - other.bits)

    def __le__(self, other: "PairBitmap") -> bool:
        return self.bits <= other.bits

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PairBitmap) and self.bits == other.bits

    def __len__(self) -> int:
        return len(self.bits)

    def __bool__(self) -> bool:
        return len(self.bits) > 0

    def pairs(self) -> Iterator[Pair]:
        return (pair_from_index(index) for index in self.bits)

    def pairs_descending(self) -> Iterator[Pair]:
        return (pair_from_index(index) for index in reversed(list(self.bits)))

    def __repr__(self) -> str:
        return f"PairBitmap({sorted(self.pairs())!r})"
