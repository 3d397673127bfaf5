# nestprof/services/profiling_service.py
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path as FilePath
from typing import List, Optional, Sequence, Set, TextIO, Tuple, Union

import numpy as np

from nestprof.config import Settings, get_settings
from nestprof.core.approx import Threshold, strength_from_cover, violation_strength
from nestprof.core.bitmap import PairBitmap
from nestprof.core.fd_mining import Nfd, build_adjacency, fdep_collect, fdep_mine, tane_collect, tane_mine
from nestprof.core.ind_mining import Nind, demarchi_collect, demarchi_mine, spider_collect, spider_mine
from nestprof.core.json_model import DocumentCollection, Path, iter_leaves, load_collection
from nestprof.core.oracle import MAX_EXACT_COVER_VERTICES, exact_min_vertex_cover, nfd_violations, validate_nind
from nestprof.core.unroll import UnrollStats, count_unrolled_rows, export_csv, static_unroll
from nestprof.exceptions import InputError, InsufficientDocumentsError, UsageError
from nestprof.models.schemas import (
    Algorithm,
    CollectionStats,
    DependencyKind,
    DependencyRecord,
    InputFormat,
    MiningRequest,
    TimingRecord,
)
from nestprof.services.budget_service import MetadataBudget, create_budget

logger = logging.getLogger(__name__)

NIND_SEPARATORS = ("⊆", "<")
NFD_SEPARATORS = ("->", "→")


@dataclass
class MiningResult:
    records: List[DependencyRecord]
    timing: TimingRecord


def to_record(dependency: Union[Nind, Nfd]) -> DependencyRecord:
    if isinstance(dependency, Nind):
        return DependencyRecord(
            kind="nind",
            lhs=[str(dependency.lhs)],
            rhs=str(dependency.rhs),
            strength=dependency.strength,
            satisfied=dependency.satisfied,
        )
    return DependencyRecord(
        kind="nfd",
        lhs=dependency.lhs_texts,
        rhs=str(dependency.rhs),
        strength=dependency.strength,
        satisfied=dependency.satisfied,
    )


def _split_outside_quotes(text: str, separator: str) -> List[str]:
    """Split on ``separator`` wherever it is not inside a quoted path key."""
    parts, current, quote, pos = [], [], None, 0
    while pos < len(text):
        char = text[pos]
        if quote:
            current.append(char)
            if char == "\\" and pos + 1 < len(text):
                current.append(text[pos + 1])
                pos += 1
            elif char == quote:
                quote = None
        elif char in "'\"":
            quote = char
            current.append(char)
        elif text.startswith(separator, pos):
            parts.append("".join(current))
            current = []
            pos += len(separator)
            continue
        else:
            current.append(char)
        pos += 1
    parts.append("".join(current))
    return parts


def parse_dependency(text: str) -> Tuple[DependencyKind, List[Path], Path]:
    """Read ``P1 < P2`` (or ``⊆``) as an inclusion and ``P1, P2 -> P3`` (or ``→``) as a functional dependency."""
    for kind, separators in ((DependencyKind.FD, NFD_SEPARATORS), (DependencyKind.IND, NIND_SEPARATORS)):
        for separator in separators:
            sides = _split_outside_quotes(text, separator)
            if len(sides) == 1:
                continue
            if len(sides) != 2:
                raise UsageError(f"expected exactly one {separator!r} in {text!r}")
            lhs_text, rhs_text = sides
            lhs = [Path.parse(part) for part in _split_outside_quotes(lhs_text, ",")]
            rhs = Path.parse(rhs_text)
            if kind is DependencyKind.IND and len(lhs) != 1:
                raise UsageError("inclusion dependencies are unary: one path on each side")
            if rhs in lhs:
                logger.info(f"{text!r} is trivial: the right-hand side appears on the left")
            return kind, lhs, rhs
    raise UsageError(f"cannot read dependency {text!r}: use 'P1 < P2' or 'P1, P2 -> P3'")


class ProfilingService:
    def __init__(self, settings: Optional[Settings] = None, budget: Optional[MetadataBudget] = None):
        self.settings = settings or get_settings()
        self.budget = budget or create_budget(self.settings)

    def load(self, file_path: Union[str, FilePath], format: InputFormat = InputFormat.JSON_LINES) -> DocumentCollection:
        try:
            return load_collection(file_path, format)
        except OSError as exc:
            raise InputError(f"cannot read input {file_path}: {exc}") from exc

    def mine(self, collection: DocumentCollection, request: MiningRequest) -> MiningResult:
        threshold = Threshold(request.threshold_fraction)
        n_docs = len(collection)
        stats: List[UnrollStats] = []
        logger.info(
            f"Mining {request.kind.value} dependencies with {request.algorithm.value} "
            f"({request.unroll.value} unrolling, threshold {threshold.value}) over {n_docs} documents"
        )
        if request.kind is DependencyKind.FD and n_docs < 2:
            raise InsufficientDocumentsError(n_docs)

        start = time.perf_counter()
        collect_args = dict(mode=request.unroll, threads=request.threads, budget=self.budget, stats=stats)
        if request.algorithm is Algorithm.SPIDER:
            meta = spider_collect(collection, **collect_args)
            collected = time.perf_counter()
            dependencies = spider_mine(meta, threshold)
        elif request.algorithm is Algorithm.DEMARCHI:
            meta = demarchi_collect(collection, **collect_args)
            collected = time.perf_counter()
            dependencies = demarchi_mine(meta, threshold)
        elif request.algorithm is Algorithm.TANE:
            meta = tane_collect(collection, **collect_args)
            collected = time.perf_counter()
            adjacency = build_adjacency(meta, n_docs, threads=request.threads, budget=self.budget)
            dependencies = tane_mine(adjacency, n_docs, threshold, request.max_lhs)
        else:
            meta = fdep_collect(collection, **collect_args)
            collected = time.perf_counter()
            dependencies = fdep_mine(meta, n_docs, threshold, request.max_lhs, budget=self.budget)
        finished = time.perf_counter()

        records = sorted(
            (to_record(dep) for dep in dependencies if dep.satisfied or request.include_unsatisfied),
            key=lambda record: record.sort_key,
        )
        unroll = stats[0]
        timing = TimingRecord(
            phase_collect_s=collected - start,
            phase_mine_s=finished - collected,
            rows_processed=unroll.rows_processed,
            expansion_factor=unroll.expansion_factor,
        )
        logger.info(
            f"Collect {timing.phase_collect_s:.3f}s, mine {timing.phase_mine_s:.3f}s, "
            f"{len(records)} records emitted"
        )
        return MiningResult(records=records, timing=timing)

    def verify(self, collection: DocumentCollection, expression: str, threshold: Threshold = Threshold()) -> DependencyRecord:
        kind, lhs, rhs = parse_dependency(expression)
        if kind is DependencyKind.IND:
            valid, strength = validate_nind(collection, lhs[0], rhs)
            logger.info(f"{lhs[0]} ⊆ {rhs}: valid={valid}, strength={strength}")
            return DependencyRecord(
                kind="nind", lhs=[str(lhs[0])], rhs=str(rhs), strength=strength, satisfied=threshold.satisfied(strength)
            )

        n_docs = len(collection)
        if n_docs < 2:
            raise InsufficientDocumentsError(n_docs)
        graph = nfd_violations(collection, lhs, rhs)
        if len(graph.vertices) <= MAX_EXACT_COVER_VERTICES:
            strength = strength_from_cover(exact_min_vertex_cover(graph), n_docs)
        else:
            logger.warning(
                f"{len(graph.vertices)} violating documents is too many for an exact cover; using the greedy estimate"
            )
            strength = violation_strength(PairBitmap.from_pairs(graph.edges), n_docs)
        return DependencyRecord(
            kind="nfd",
            lhs=sorted(str(path) for path in set(lhs)),
            rhs=str(rhs),
            strength=strength,
            satisfied=threshold.satisfied(strength),
        )

    def describe(self, collection: DocumentCollection) -> CollectionStats:
        """Size, attribute values and nesting of a collection.

        An attribute value is a non-null atomic leaf. Its nesting level is the
        number of objects and arrays enclosing it, the document itself included,
        which is the length of its path.
        """
        sizes, values, levels = [], [], []
        paths: Set[Path] = set()
        for doc in collection:
            leaves = list(iter_leaves(doc))
            sizes.append(len(json.dumps(doc.root, ensure_ascii=False, separators=(",", ":")).encode("utf-8")))
            values.append(len(leaves))
            levels.extend(len(path.steps) for path, _atom in leaves)
            paths.update(path for path, _atom in leaves)
        n_docs = len(collection)
        rows = sum(count_unrolled_rows(doc.root) for doc in collection)
        stats = CollectionStats(
            n_docs=n_docs,
            n_paths=len(paths),
            avg_size_bytes=float(np.mean(sizes)) if sizes else 0.0,
            avg_attribute_values=float(np.mean(values)) if values else 0.0,
            avg_nesting=float(np.mean(levels)) if levels else 0.0,
            max_nesting=max(levels, default=0),
            expansion_factor=rows / n_docs if n_docs else 1.0,
        )
        logger.info(f"Described {n_docs} documents: {stats.n_paths} paths, maximum nesting {stats.max_nesting}")
        return stats

    def flatten(self, collection: DocumentCollection, destination: Union[str, TextIO], include_doc_id: bool = False) -> int:
        table = static_unroll(collection, self.budget)
        export_csv(table, destination, include_doc_id=include_doc_id)
        return len(table.rows)


def write_records(records: Sequence[DependencyRecord], stream: TextIO, timing: Optional[TimingRecord] = None) -> None:
    for record in records:
        stream.write(record.to_json_line())
        stream.write("\n")
    if timing is not None:
        stream.write(timing.to_json_line())
        stream.write("\n")
