# nestprof/core/ind_mining.py
# Unary nested inclusion dependencies: SPIDER and DeMarchi over unrolled metadata.
from __future__ import annotations

import heapq
import logging
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import groupby, repeat
from operator import itemgetter
from typing import Dict, List, Optional, Set, Tuple

from nestprof.core.approx import Threshold
from nestprof.core.json_model import Atomic, DocumentCollection, Path
from nestprof.core.unroll import MetadataSink, UnrollStats, collect
from nestprof.exceptions import MiningError
from nestprof.models.schemas import UnrollMode

logger = logging.getLogger(__name__)

# path -> sorted distinct values
SpiderMeta = Dict[Path, List[Atomic]]
# value -> paths holding it
DeMarchiMeta = Dict[Atomic, Set[Path]]
PathPair = Tuple[Path, Path]


@dataclass(frozen=True)
class Nind:
    lhs: Path
    rhs: Path
    strength: Fraction
    satisfied: bool

    @property
    def sort_key(self) -> Tuple[str, str]:
        return (str(self.lhs), str(self.rhs))

    def __str__(self) -> str:
        return f"{self.lhs} ⊆ {self.rhs} ({float(self.strength):.6f})"


class SpiderSink(MetadataSink[Dict[Path, Set[Atomic]]]):
    mergeable = True

    def initialize(self) -> Dict[Path, Set[Atomic]]:
        return {}

    def update(self, state, doc_id, path, value) -> None:
        values = state.get(path)
        if values is None:
            state[path] = {value}
        else:
            values.add(value)

    def merge(self, left, right):
        for path, values in right.items():
            left.setdefault(path, set()).update(values)
        return left

    def size_hint(self, state) -> int:
        return sum(len(values) for values in state.values())


class DeMarchiSink(MetadataSink[DeMarchiMeta]):
    mergeable = True

    def initialize(self) -> DeMarchiMeta:
        return {}

    def update(self, state, doc_id, path, value) -> None:
        paths = state.get(value)
        if paths is None:
            state[value] = {path}
        else:
            paths.add(path)

    def merge(self, left, right):
        for value, paths in right.items():
            left.setdefault(value, set()).update(paths)
        return left

    def size_hint(self, state) -> int:
        return sum(len(paths) for paths in state.values())


def spider_collect(
    collection: DocumentCollection,
    mode: UnrollMode = UnrollMode.DYNAMIC,
    threads: int = 1,
    budget=None,
    stats: Optional[List[UnrollStats]] = None,
) -> SpiderMeta:
    state, unroll_stats = collect(collection, SpiderSink(), mode=mode, threads=threads, budget=budget)
    if stats is not None:
        stats.append(unroll_stats)
    return {path: sorted(values) for path, values in state.items()}


def demarchi_collect(
    collection: DocumentCollection,
    mode: UnrollMode = UnrollMode.DYNAMIC,
    threads: int = 1,
    budget=None,
    stats: Optional[List[UnrollStats]] = None,
) -> DeMarchiMeta:
    state, unroll_stats = collect(collection, DeMarchiSink(), mode=mode, threads=threads, budget=budget)
    if stats is not None:
        stats.append(unroll_stats)
    return state


def inclusion_counts(meta: SpiderMeta) -> Tuple[Dict[Path, int], Dict[PathPair, int]]:
    """Distinct values per path and, per ordered pair, distinct lhs values found under rhs.

    One sort-merge pass over every path's sorted value stream: values are
    pulled off a heap in order, and each group of paths sharing a value
    credits every ordered pair inside the group (the diagonal included).
    """
    paths = sorted(meta)
    totals = {path: len(meta[path]) for path in paths}
    included: Dict[PathPair, int] = defaultdict(int)
    streams = [zip(meta[path], repeat(k)) for k, path in enumerate(paths)]
    for _value, group in groupby(heapq.merge(*streams), key=itemgetter(0)):
        holders = [paths[k] for _v, k in group]
        for lhs in holders:
            for rhs in holders:
                included[(lhs, rhs)] += 1
    return totals, dict(included)


def _demarchi_counts(meta: DeMarchiMeta) -> Tuple[Dict[Path, int], Dict[PathPair, int]]:
    totals: Dict[Path, int] = defaultdict(int)
    included: Dict[PathPair, int] = defaultdict(int)
    for paths in meta.values():
        for lhs in paths:
            totals[lhs] += 1
            # the valid right-hand sides of lhs shrink to the paths that share this value
            for rhs in paths:
                included[(lhs, rhs)] += 1
    return dict(totals), dict(included)


def _emit(totals: Dict[Path, int], included: Dict[PathPair, int], threshold: Threshold) -> List[Nind]:
    if not totals:
        raise MiningError("no paths: the collection holds no atomic values")
    dependencies = []
    paths = sorted(totals)
    for lhs in paths:
        total = totals[lhs]
        if total == 0:
            continue
        for rhs in paths:
            if rhs == lhs:
                continue
            strength = Fraction(included.get((lhs, rhs), 0), total)
            dependencies.append(Nind(lhs, rhs, strength, threshold.satisfied(strength)))
    satisfied = sum(1 for dep in dependencies if dep.satisfied)
    logger.info(f"Scored {len(dependencies)} inclusion candidates over {len(paths)} paths, {satisfied} satisfied")
    return dependencies


def spider_mine(meta: SpiderMeta, threshold: Threshold = Threshold()) -> List[Nind]:
    totals, included = inclusion_counts(meta)
    return _emit(totals, included, threshold)


def demarchi_mine(meta: DeMarchiMeta, threshold: Threshold = Threshold()) -> List[Nind]:
    totals, included = _demarchi_counts(meta)
    return _emit(totals, included, threshold)
