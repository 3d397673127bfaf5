# nestprof/core/fd_mining.py
"""
Nested functional dependencies over document pairs.

Two documents agree on a path when their value sets at that path intersect.
``lhs -> rhs`` holds when every pair of distinct documents agreeing on all
lhs paths also agrees on rhs. TANE keeps one agreement bitmap per path and
checks candidates by bitmap containment; FDep groups pairs by the exact set
of paths they agree on and derives valid dependencies from the maximal
disagreements. Both walk the same minimal lattice in approximate mode, so
their strengths always coincide.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from operator import itemgetter
from typing import TYPE_CHECKING, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from nestprof.core.approx import Threshold, violation_strength
from nestprof.core.bitmap import PairBitmap, clique_indices
from nestprof.core.json_model import Atomic, DocumentCollection, Path
from nestprof.core.unroll import MetadataSink, UnrollStats, collect
from nestprof.exceptions import InsufficientDocumentsError, MiningError
from nestprof.models.schemas import UnrollMode

if TYPE_CHECKING:
    from nestprof.services.budget_service import MetadataBudget

logger = logging.getLogger(__name__)

PathSet = FrozenSet[Path]
# upper bound for a roaring bitmap entry, in bytes
BITMAP_BYTES_PER_PAIR = 2


@dataclass(frozen=True)
class Nfd:
    lhs: PathSet
    rhs: Path
    strength: Fraction
    satisfied: bool

    @property
    def lhs_texts(self) -> List[str]:
        return sorted(str(path) for path in self.lhs)

    @property
    def sort_key(self) -> Tuple[List[str], str]:
        return (self.lhs_texts, str(self.rhs))

    def __str__(self) -> str:
        return f"{', '.join(self.lhs_texts)} → {self.rhs} ({float(self.strength):.6f})"


def _require_pairs(n_docs: int) -> None:
    if n_docs < 2:
        raise InsufficientDocumentsError(n_docs)


# --- TANE ---

@dataclass
class TaneMeta:
    value_indexes: Dict[Atomic, int] = field(default_factory=dict)
    load_partitions: Dict[Path, Dict[int, Set[int]]] = field(default_factory=dict)

    def partition(self, path: Path, value: Atomic) -> Set[int]:
        index = self.value_indexes.get(value)
        if index is None:
            return set()
        return self.load_partitions.get(path, {}).get(index, set())


class TaneSink(MetadataSink[TaneMeta]):
    mergeable = True

    def initialize(self) -> TaneMeta:
        return TaneMeta()

    def update(self, state, doc_id, path, value) -> None:
        index = state.value_indexes.get(value)
        if index is None:
            index = state.value_indexes[value] = len(state.value_indexes)
        partitions = state.load_partitions.get(path)
        if partitions is None:
            partitions = state.load_partitions[path] = {}
        members = partitions.get(index)
        if members is None:
            partitions[index] = {doc_id}
        else:
            members.add(doc_id)

    def merge(self, left, right):
        # right-hand indexes are renumbered in their own order of first appearance
        remap = {}
        for value, index in sorted(right.value_indexes.items(), key=itemgetter(1)):
            remap[index] = left.value_indexes.setdefault(value, len(left.value_indexes))
        for path, partitions in right.load_partitions.items():
            target = left.load_partitions.setdefault(path, {})
            for index, members in partitions.items():
                target.setdefault(remap[index], set()).update(members)
        return left

    def size_hint(self, state) -> int:
        return len(state.value_indexes) + sum(
            len(members) for partitions in state.load_partitions.values() for members in partitions.values()
        )


def tane_collect(
    collection: DocumentCollection,
    mode: UnrollMode = UnrollMode.DYNAMIC,
    threads: int = 1,
    budget: Optional["MetadataBudget"] = None,
    stats: Optional[List[UnrollStats]] = None,
) -> TaneMeta:
    state, unroll_stats = collect(collection, TaneSink(), mode=mode, threads=threads, budget=budget)
    if stats is not None:
        stats.append(unroll_stats)
    return state


def build_adjacency(
    meta: TaneMeta, n_docs: int, threads: int = 1, budget: Optional["MetadataBudget"] = None
) -> Dict[Path, PairBitmap]:
    """Per path, the bitmap of document pairs whose value sets intersect there."""
    _require_pairs(n_docs)
    paths = sorted(meta.load_partitions)

    def build(path: Path) -> PairBitmap:
        partitions = meta.load_partitions[path]
        return PairBitmap.from_cliques(partitions[index] for index in sorted(partitions))

    if threads > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            bitmaps = list(pool.map(build, paths))
    else:
        bitmaps = [build(path) for path in paths]
    adjacency = dict(zip(paths, bitmaps))

    stored = sum(len(bitmap) for bitmap in bitmaps)
    if budget is not None:
        budget.check_bytes(stored * BITMAP_BYTES_PER_PAIR, what="pair bitmaps")
    logger.info(f"Built adjacency bitmaps for {len(paths)} paths, {stored} agreeing pairs stored")
    return adjacency


class LhsEvaluator:
    """Validity and violating pairs of candidate dependencies, queried by the lattice walk."""

    def holds(self, lhs: PathSet, rhs: Path) -> bool:
        raise NotImplementedError

    def violations(self, lhs: PathSet, rhs: Path) -> PairBitmap:
        raise NotImplementedError

    def forget(self, size: int) -> None:
        """Drop anything cached for left-hand sides of ``size`` paths or fewer."""


class TaneEvaluator(LhsEvaluator):
    def __init__(self, adjacency: Dict[Path, PairBitmap]):
        self.adjacency = adjacency
        self.cache: Dict[PathSet, PairBitmap] = {}

    def lhs_bitmap(self, lhs: PathSet) -> PairBitmap:
        if len(lhs) == 1:
            return self.adjacency[next(iter(lhs))]
        cached = self.cache.get(lhs)
        if cached is not None:
            return cached
        ordered = sorted(lhs)
        bitmap = self.lhs_bitmap(frozenset(ordered[:-1])) & self.adjacency[ordered[-1]]
        self.cache[lhs] = bitmap
        return bitmap

    def holds(self, lhs, rhs) -> bool:
        return self.lhs_bitmap(lhs) <= self.adjacency[rhs]

    def violations(self, lhs, rhs) -> PairBitmap:
        return self.lhs_bitmap(lhs) - self.adjacency[rhs]

    def forget(self, size: int) -> None:
        self.cache = {lhs: bitmap for lhs, bitmap in self.cache.items() if len(lhs) > size}


def _lhs_order(lhs: PathSet) -> Tuple[Path, ...]:
    return tuple(sorted(lhs))


def lattice_search(
    paths: Iterable[Path],
    evaluator: LhsEvaluator,
    n_docs: int,
    threshold: Threshold,
    max_lhs: int,
) -> List[Nfd]:
    """Levelwise walk emitting only minimal satisfied dependencies.

    Every node carries the right-hand sides no proper subset of it already
    determines. A node whose candidates are all used up is not extended.
    """
    universe = frozenset(paths)
    level: Dict[PathSet, PathSet] = {frozenset([path]): universe - {path} for path in universe}
    found: List[Nfd] = []

    for size in range(1, max_lhs + 1):
        kept: Dict[PathSet, PathSet] = {}
        for lhs in sorted(level, key=_lhs_order):
            open_rhs = set(level[lhs])
            for rhs in sorted(level[lhs]):
                if threshold.exact:
                    satisfied = evaluator.holds(lhs, rhs)
                    strength = Fraction(1) if satisfied else Fraction(0)
                else:
                    strength = violation_strength(evaluator.violations(lhs, rhs), n_docs)
                    satisfied = threshold.satisfied(strength)
                if satisfied:
                    found.append(Nfd(lhs, rhs, strength, True))
                    open_rhs.discard(rhs)
            if open_rhs:
                kept[lhs] = frozenset(open_rhs)
        logger.debug(f"Lattice level {size}: {len(level)} nodes checked, {len(kept)} extended")
        evaluator.forget(size - 1)
        if size == max_lhs or not kept:
            break
        level = _next_level(kept)

    found.sort(key=lambda nfd: nfd.sort_key)
    return found


def _next_level(kept: Dict[PathSet, PathSet]) -> Dict[PathSet, PathSet]:
    by_prefix: Dict[Tuple[Path, ...], List[Path]] = defaultdict(list)
    for lhs in kept:
        ordered = _lhs_order(lhs)
        by_prefix[ordered[:-1]].append(ordered[-1])

    level: Dict[PathSet, PathSet] = {}
    for prefix, tails in by_prefix.items():
        for first, second in combinations(sorted(tails), 2):
            node = frozenset(prefix + (first, second))
            parents = [node - {path} for path in node]
            if not all(parent in kept for parent in parents):
                continue
            candidates = frozenset.intersection(*(kept[parent] for parent in parents)) - node
            if candidates:
                level[node] = candidates
    return level


def tane_mine(
    adjacency: Dict[Path, PairBitmap],
    n_docs: int,
    threshold: Threshold = Threshold(),
    max_lhs: int = 3,
) -> List[Nfd]:
    _require_pairs(n_docs)
    if not adjacency:
        raise MiningError("no paths: the collection holds no atomic values")
    if max_lhs < 1:
        raise ValueError(f"max_lhs must be at least 1, got {max_lhs}")
    dependencies = lattice_search(adjacency, TaneEvaluator(adjacency), n_docs, threshold, max_lhs)
    logger.info(f"TANE found {len(dependencies)} minimal dependencies over {len(adjacency)} paths")
    return dependencies


# --- FDep ---

@dataclass
class FdepMeta:
    paths: Set[Path] = field(default_factory=set)
    docs: Dict[int, Dict[Path, Set[Atomic]]] = field(default_factory=dict)


class FdepSink(MetadataSink[FdepMeta]):
    mergeable = True

    def initialize(self) -> FdepMeta:
        return FdepMeta()

    def update(self, state, doc_id, path, value) -> None:
        state.paths.add(path)
        values = state.docs.setdefault(doc_id, {})
        members = values.get(path)
        if members is None:
            values[path] = {value}
        else:
            members.add(value)

    def merge(self, left, right):
        left.paths.update(right.paths)
        for doc_id, values in right.docs.items():
            target = left.docs.setdefault(doc_id, {})
            for path, members in values.items():
                target.setdefault(path, set()).update(members)
        return left

    def size_hint(self, state) -> int:
        return sum(len(members) for values in state.docs.values() for members in values.values())


def fdep_collect(
    collection: DocumentCollection,
    mode: UnrollMode = UnrollMode.DYNAMIC,
    threads: int = 1,
    budget: Optional["MetadataBudget"] = None,
    stats: Optional[List[UnrollStats]] = None,
) -> FdepMeta:
    state, unroll_stats = collect(collection, FdepSink(), mode=mode, threads=threads, budget=budget)
    if stats is not None:
        stats.append(unroll_stats)
    return state


@dataclass(frozen=True)
class AgreeSet:
    """Document pairs agreeing on exactly ``paths``."""

    paths: PathSet
    pairs: PairBitmap


def _agreeing_pairs(meta: FdepMeta, path: Path) -> np.ndarray:
    holders: Dict[Atomic, List[int]] = defaultdict(list)
    for doc_id in sorted(meta.docs):
        for value in meta.docs[doc_id].get(path, ()):
            holders[value].append(doc_id)
    cliques = [clique_indices(ids) for ids in holders.values() if len(ids) > 1]
    if not cliques:
        return np.empty(0, dtype=np.int64)
    return np.unique(np.concatenate(cliques))


def agree_sets(meta: FdepMeta, paths: Sequence[Path]) -> List[AgreeSet]:
    """Group every agreeing document pair by the set of paths it agrees on.

    Pairs agreeing on nothing are left out: they cannot violate a dependency
    with a non-empty left-hand side.
    """
    per_path = [_agreeing_pairs(meta, path) for path in paths]
    present = [indices for indices in per_path if indices.size]
    if not present:
        return []
    pair_ids = np.unique(np.concatenate(present))

    # one bit per path, packed into 64-bit words
    words = np.zeros((pair_ids.size, (len(paths) + 63) // 64), dtype=np.uint64)
    for k, indices in enumerate(per_path):
        if indices.size:
            rows = np.searchsorted(pair_ids, indices)
            words[rows, k // 64] |= np.uint64(1 << (k % 64))

    masks, inverse = np.unique(words, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(inverse, kind="stable")
    bounds = np.cumsum(np.bincount(inverse, minlength=len(masks)))[:-1]
    groups = np.split(pair_ids[order], bounds)

    result = []
    for row, indices in zip(masks, groups):
        members = frozenset(path for k, path in enumerate(paths) if (int(row[k // 64]) >> (k % 64)) & 1)
        result.append(AgreeSet(members, PairBitmap.from_indices(indices.tolist())))
    return result


def negative_cover(sets: Sequence[AgreeSet], paths: Iterable[Path]) -> Dict[Path, List[PathSet]]:
    """Per rhs, the maximal agree-sets leaving it out: every lhs inside one is refuted."""
    cover: Dict[Path, List[PathSet]] = {}
    distinct = sorted({agree.paths for agree in sets}, key=lambda members: (-len(members), _lhs_order(members)))
    for rhs in paths:
        maximal: List[PathSet] = []
        for members in distinct:
            if rhs in members:
                continue
            if not any(members <= other for other in maximal):
                maximal.append(members)
        cover[rhs] = maximal
    return cover


def positive_cover(refuted: Sequence[PathSet], rhs: Path, paths: Iterable[Path], max_lhs: int) -> List[PathSet]:
    """Minimal left-hand sides for ``rhs`` outside every refuted set, by specialisation."""
    others = sorted(set(paths) - {rhs})
    cover: Set[PathSet] = {frozenset([path]) for path in others}
    for members in refuted:
        invalid = [lhs for lhs in cover if lhs <= members]
        if not invalid:
            continue
        cover.difference_update(invalid)
        extensions = [path for path in others if path not in members]
        for lhs in sorted(invalid, key=_lhs_order):
            for path in extensions:
                special = lhs | {path}
                if len(special) > max_lhs:
                    continue
                if not any(existing <= special for existing in cover):
                    cover.add(special)
    return sorted((lhs for lhs in cover if not any(other < lhs for other in cover)), key=_lhs_order)


class FdepEvaluator(LhsEvaluator):
    def __init__(self, sets: Sequence[AgreeSet], refuted: Dict[Path, List[PathSet]]):
        self.sets = sets
        self.refuted = refuted

    def holds(self, lhs, rhs) -> bool:
        return not any(lhs <= members for members in self.refuted[rhs])

    def violations(self, lhs, rhs) -> PairBitmap:
        bitmap = PairBitmap()
        for agree in self.sets:
            if rhs not in agree.paths and lhs <= agree.paths:
                bitmap = bitmap | agree.pairs
        return bitmap


def fdep_mine(
    meta: FdepMeta,
    n_docs: int,
    threshold: Threshold = Threshold(),
    max_lhs: int = 3,
    budget: Optional["MetadataBudget"] = None,
) -> List[Nfd]:
    _require_pairs(n_docs)
    if not meta.paths:
        raise MiningError("no paths: the collection holds no atomic values")
    if max_lhs < 1:
        raise ValueError(f"max_lhs must be at least 1, got {max_lhs}")

    paths = sorted(meta.paths)
    sets = agree_sets(meta, paths)
    if budget is not None:
        budget.check_bytes(sum(len(agree.pairs) for agree in sets) * BITMAP_BYTES_PER_PAIR, what="agree sets")
    refuted = negative_cover(sets, paths)
    logger.debug(
        f"FDep: {len(sets)} distinct agree-sets, "
        f"{sum(len(members) for members in refuted.values())} maximal non-dependencies"
    )

    if threshold.exact:
        dependencies = [
            Nfd(lhs, rhs, Fraction(1), True)
            for rhs in paths
            for lhs in positive_cover(refuted[rhs], rhs, paths, max_lhs)
        ]
        dependencies.sort(key=lambda nfd: nfd.sort_key)
    else:
        dependencies = lattice_search(paths, FdepEvaluator(sets, refuted), n_docs, threshold, max_lhs)
    logger.info(f"FDep found {len(dependencies)} minimal dependencies over {len(paths)} paths")
    return dependencies
