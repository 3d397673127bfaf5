# nestprof/core/approx.py
# Strength bookkeeping shared by the approximate miners.
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, Iterable, Tuple, Union

import networkx as nx

from nestprof.core.bitmap import Pair, PairBitmap, pair_index
from nestprof.exceptions import UsageError

DEFAULT_THRESHOLD = Fraction(99, 100)


@dataclass(frozen=True)
class Threshold:
    value: Fraction = DEFAULT_THRESHOLD

    def __post_init__(self):
        if not 0 < self.value <= 1:
            raise UsageError(f"threshold must be in (0, 1], got {self.value}")

    @classmethod
    def parse(cls, text: Union[str, float, Fraction]) -> "Threshold":
        try:
            value = Fraction(repr(text)) if isinstance(text, float) else Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"invalid threshold {text!r}") from exc
        return cls(value)

    @property
    def exact(self) -> bool:
        return self.value == 1

    def satisfied(self, strength: Fraction) -> bool:
        return strength >= self.value


@dataclass(frozen=True)
class ViolationGraph:
    """Documents connected whenever the pair violates one dependency."""

    edges: FrozenSet[Pair]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Pair]) -> "ViolationGraph":
        edges = set()
        for i, j in pairs:
            if i == j:
                raise ValueError(f"self-loop on document {i}")
            edges.add((i, j) if i < j else (j, i))
        return cls(frozenset(edges))

    @classmethod
    def from_bitmap(cls, bitmap: PairBitmap) -> "ViolationGraph":
        return cls(frozenset(bitmap.pairs()))

    @property
    def vertices(self) -> FrozenSet[int]:
        return frozenset(v for edge in self.edges for v in edge)

    def canonical_edges(self) -> Tuple[Pair, ...]:
        """Edges in processing order for the greedy cover: descending pair index."""
        return tuple(sorted(self.edges, key=lambda e: pair_index(*e), reverse=True))

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_edges_from(self.edges)
        return graph


def greedy_cover_pairs(ordered_pairs: Iterable[Pair]) -> int:
    # maximal matching: take both endpoints of every edge no earlier edge touched
    marked = set()
    for i, j in ordered_pairs:
        if i not in marked and j not in marked:
            marked.add(i)
            marked.add(j)
    return len(marked)


def greedy_vertex_cover(graph: ViolationGraph) -> int:
    return greedy_cover_pairs(graph.canonical_edges())


def strength_from_cover(cover_size: int, n_docs: int) -> Fraction:
    if n_docs <= 0:
        raise ValueError("strength needs at least one document")
    if not 0 <= cover_size <= n_docs:
        raise ValueError(f"cover size {cover_size} outside [0, {n_docs}]")
    return 1 - Fraction(cover_size, n_docs)


def violation_strength(violations: PairBitmap, n_docs: int) -> Fraction:
    """Strength of a dependency from its violating pairs, greedy cover in canonical order."""
    if not violations:
        return Fraction(1)
    return strength_from_cover(greedy_cover_pairs(violations.pairs_descending()), n_docs)
