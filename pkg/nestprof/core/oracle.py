# nestprof/core/oracle.py
# Brute-force readings of the dependency definitions. Test and verify support only.
from __future__ import annotations

import logging
from fractions import Fraction
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple, Union

import networkx as nx

from nestprof.core.approx import ViolationGraph, strength_from_cover
from nestprof.core.json_model import Document, DocumentCollection, Path, ValueSet, enumerate_paths, evaluate_path

logger = logging.getLogger(__name__)

MAX_EXACT_COVER_VERTICES = 20

ValueTable = Dict[Path, List[ValueSet]]


def collection_values(collection: DocumentCollection, path: Path) -> Set:
    values: Set = set()
    for doc in collection:
        values.update(evaluate_path(doc, path))
    return values


def fully_included(collection: DocumentCollection, doc: Document, p1: Path, p2: Path) -> bool:
    lhs = evaluate_path(doc, p1)
    if not lhs:
        return True
    return lhs <= collection_values(collection, p2)


def validate_nind(collection: DocumentCollection, p1: Path, p2: Path) -> Tuple[bool, Fraction]:
    universe = collection_values(collection, p2)
    valid = all(evaluate_path(doc, p1) <= universe for doc in collection)
    lhs_values = collection_values(collection, p1)
    if not lhs_values:
        return valid, Fraction(1)
    return valid, Fraction(len(lhs_values & universe), len(lhs_values))


def value_table(collection: DocumentCollection, paths: Iterable[Path]) -> ValueTable:
    """Value set of every path in every document, indexed by position (id - 1)."""
    return {path: [evaluate_path(doc, path) for doc in collection] for path in paths}


def _as_paths(paths: Union[Path, Iterable[Path]]) -> Tuple[Path, ...]:
    return (paths,) if isinstance(paths, Path) else tuple(paths)


def _agree(table: ValueTable, path: Path, i: int, j: int) -> bool:
    return not table[path][i].isdisjoint(table[path][j])


def nfd_violations(
    collection: DocumentCollection,
    lhs: Iterable[Path],
    rhs: Union[Path, Iterable[Path]],
    table: Optional[ValueTable] = None,
) -> ViolationGraph:
    """Pairs of distinct documents agreeing on every lhs path but not on every rhs path."""
    lhs, rhs = _as_paths(lhs), _as_paths(rhs)
    table = table if table is not None else value_table(collection, set(lhs) | set(rhs))
    edges = []
    for i, j in combinations(range(len(collection)), 2):
        if all(_agree(table, p, i, j) for p in lhs) and not all(_agree(table, p, i, j) for p in rhs):
            edges.append((i + 1, j + 1))
    return ViolationGraph.from_pairs(edges)


def validate_nfd(
    collection: DocumentCollection,
    lhs: Iterable[Path],
    rhs: Union[Path, Iterable[Path]],
    table: Optional[ValueTable] = None,
) -> bool:
    return not nfd_violations(collection, lhs, rhs, table).edges


def exact_min_vertex_cover(graph: ViolationGraph) -> int:
    """Minimum vertex cover as |V| minus the largest independent set.

    Exponential; refused above twenty vertices.
    """
    vertices = graph.vertices
    if len(vertices) > MAX_EXACT_COVER_VERTICES:
        raise ValueError(f"exact cover limited to {MAX_EXACT_COVER_VERTICES} vertices, got {len(vertices)}")
    if not vertices:
        return 0
    complement = nx.complement(graph.to_networkx())
    _clique, independent = nx.max_weight_clique(complement, weight=None)
    return len(vertices) - independent


def exact_nfd_strength(collection: DocumentCollection, lhs: Iterable[Path], rhs: Union[Path, Iterable[Path]]) -> Fraction:
    graph = nfd_violations(collection, lhs, rhs)
    return strength_from_cover(exact_min_vertex_cover(graph), len(collection))


def exact_nind_set(collection: DocumentCollection, paths: Optional[Iterable[Path]] = None) -> Set[Tuple[Path, Path]]:
    paths = sorted(paths if paths is not None else enumerate_paths(collection))
    valid = set()
    for p1 in paths:
        for p2 in paths:
            if p1 != p2 and validate_nind(collection, p1, p2)[0]:
                valid.add((p1, p2))
    return valid


def minimal_nfds(
    collection: DocumentCollection, paths: Optional[Iterable[Path]] = None, max_lhs: int = 2
) -> Set[Tuple[FrozenSet[Path], Path]]:
    """Every valid ``lhs -> rhs`` with no valid proper non-empty subset of lhs."""
    paths = sorted(paths if paths is not None else enumerate_paths(collection))
    table = value_table(collection, paths)
    minimal = set()
    for rhs in paths:
        others = [p for p in paths if p != rhs]
        valid: List[FrozenSet[Path]] = []
        for size in range(1, max_lhs + 1):
            for combo in combinations(others, size):
                lhs = frozenset(combo)
                if any(smaller < lhs for smaller in valid):
                    continue
                if validate_nfd(collection, lhs, rhs, table):
                    valid.append(lhs)
        minimal.update((lhs, rhs) for lhs in valid)
    logger.debug(f"Oracle found {len(minimal)} minimal dependencies over {len(paths)} paths")
    return minimal
