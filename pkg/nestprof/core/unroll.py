# nestprof/core/unroll.py
"""
Two ways of feeding nested documents to a mining algorithm.

Static unrolling flattens every document into relational rows by taking the
cross product of its nested fragments. Dynamic unrolling walks each document
once and hands (document id, path, value) leaves straight to a MetadataSink,
so nothing is ever duplicated.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial
from math import prod
from typing import TYPE_CHECKING, Dict, Generic, Iterable, List, Optional, Sequence, TextIO, Tuple, TypeVar, Union

import pandas as pd

from nestprof.core.json_model import ROOT, Atomic, Document, DocumentCollection, JsonValue, Path, is_empty, to_atomic, walk_leaves
from nestprof.models.schemas import UnrollMode

if TYPE_CHECKING:
    from nestprof.services.budget_service import MetadataBudget

logger = logging.getLogger(__name__)

StateT = TypeVar("StateT")
Fragment = Dict[Path, Optional[Atomic]]

LARGE_EXPANSION_FACTOR = 1000


@dataclass(slots=True)
class FlatRow:
    doc_id: int
    cells: Fragment

    def serialized(self) -> Dict[str, object]:
        return {str(path): (cell.content if cell is not None else None) for path, cell in self.cells.items()}


@dataclass
class StaticTable:
    rows: List[FlatRow]
    columns: Tuple[Path, ...]
    n_documents: int

    @property
    def expansion_factor(self) -> float:
        return len(self.rows) / self.n_documents if self.n_documents else 1.0

    def to_frame(self, include_doc_id: bool = False) -> pd.DataFrame:
        headers = [str(column) for column in self.columns]
        records = [
            [cell.content if cell is not None else None for cell in (row.cells.get(c) for c in self.columns)]
            for row in self.rows
        ]
        frame = pd.DataFrame(records, columns=headers, dtype=object)
        if include_doc_id:
            frame.insert(0, "doc_id", [row.doc_id for row in self.rows])
        return frame


@dataclass(frozen=True)
class UnrollStats:
    mode: UnrollMode
    documents: int
    rows_processed: int
    expansion_factor: float


# --- Static unrolling ---

def flatten(path: Path, value: JsonValue) -> List[Fragment]:
    """Unroll one value into flat fragments.

    Objects take the cross product of their keys' fragments, arrays concatenate
    their elements' fragments under ``[*]``, atomics yield one single-cell
    fragment and empty values yield one null placeholder. An array directly
    inside an array is read as a positional tuple, one ``[k]`` column per slot.
    """
    if is_empty(value):
        return [{path: None}] if path.steps else [{}]
    if isinstance(value, dict):
        return _cross((path.key(key), child) for key, child in value.items())
    if isinstance(value, list):
        element_path = path.wildcard()
        fragments: List[Fragment] = []
        for element in value:
            if isinstance(element, list) and element:
                fragments.extend(_cross((element_path.index(i), item) for i, item in enumerate(element)))
            else:
                fragments.extend(flatten(element_path, element))
        return fragments
    return [{path: to_atomic(value)}]


def _cross(parts: Iterable[Tuple[Path, JsonValue]]) -> List[Fragment]:
    fragments: List[Fragment] = [{}]
    for child_path, child in parts:
        child_fragments = flatten(child_path, child)
        if len(child_fragments) == 1:
            only = child_fragments[0]
            for fragment in fragments:
                fragment.update(only)
        else:
            fragments = [{**left, **right} for left in fragments for right in child_fragments]
    return fragments


def count_unrolled_rows(value: JsonValue) -> int:
    """Number of fragments ``flatten`` would produce, without building them."""
    if is_empty(value):
        return 1
    if isinstance(value, dict):
        return prod(count_unrolled_rows(child) for child in value.values())
    if isinstance(value, list):
        return sum(
            prod(count_unrolled_rows(item) for item in element) if isinstance(element, list) and element
            else count_unrolled_rows(element)
            for element in value
        )
    return 1


def static_unroll(collection: DocumentCollection, budget: Optional["MetadataBudget"] = None) -> StaticTable:
    rows: List[FlatRow] = []
    columns = set()
    cells = 0
    for n, doc in enumerate(collection, start=1):
        for fragment in flatten(ROOT, doc.root):
            columns.update(fragment)
            cells += len(fragment)
            rows.append(FlatRow(doc.id, fragment))
        if budget is not None and n % budget.check_interval == 0:
            budget.check(cells, what="unrolled rows")

    ordered = tuple(sorted(columns))
    width = len(ordered)
    # every row shares the column universe; absent columns hold null
    for row in rows:
        if len(row.cells) != width:
            for column in ordered:
                row.cells.setdefault(column, None)
    if budget is not None:
        budget.check(len(rows) * width, what="unrolled rows")

    table = StaticTable(rows=rows, columns=ordered, n_documents=len(collection))
    if table.expansion_factor > LARGE_EXPANSION_FACTOR:
        logger.warning(f"Static unrolling expanded {len(collection)} documents by {table.expansion_factor:.1f}x")
    logger.info(f"Statically unrolled {len(collection)} documents into {len(rows)} rows x {width} columns")
    return table


def export_csv(table: StaticTable, destination: Union[str, TextIO], include_doc_id: bool = False) -> None:
    table.to_frame(include_doc_id=include_doc_id).to_csv(destination, index=False)


# --- Dynamic unrolling ---

class MetadataSink(Generic[StateT]):
    """Metadata construction callbacks driven by either unrolling strategy.

    ``update`` runs once per leaf occurrence, so a value repeated at the same
    path of one document arrives repeatedly. Sinks whose states can be built
    per worker and merged set ``mergeable``.
    """

    mergeable: bool = False

    def initialize(self) -> StateT:
        raise NotImplementedError

    def update(self, state: StateT, doc_id: int, path: Path, value: Atomic) -> None:
        raise NotImplementedError

    def merge(self, left: StateT, right: StateT) -> StateT:
        raise NotImplementedError

    def size_hint(self, state: StateT) -> int:
        """Rough count of stored entries, checked against the metadata budget."""
        return 0


def _unroll_documents(
    documents: Sequence[Document], sink: MetadataSink[StateT], budget: Optional["MetadataBudget"]
) -> StateT:
    state = sink.initialize()
    for n, doc in enumerate(documents, start=1):
        walk_leaves(ROOT, doc.root, partial(sink.update, state, doc.id))
        if budget is not None and n % budget.check_interval == 0:
            budget.check(sink.size_hint(state))
    if budget is not None:
        budget.check(sink.size_hint(state))
    return state


def dynamic_unroll(
    collection: DocumentCollection,
    sink: MetadataSink[StateT],
    threads: int = 1,
    budget: Optional["MetadataBudget"] = None,
) -> StateT:
    if threads > 1 and sink.mergeable and len(collection) > 1:
        chunks = collection.chunks(threads)
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            states = list(pool.map(lambda chunk: _unroll_documents(chunk, sink, budget), chunks))
        # merge in document order so the result matches a single-threaded run
        state = states[0]
        for other in states[1:]:
            state = sink.merge(state, other)
        logger.debug(f"Merged {len(states)} worker states for {type(sink).__name__}")
        return state
    return _unroll_documents(collection.documents, sink, budget)


def collect_rows(table: StaticTable, sink: MetadataSink[StateT], budget: Optional["MetadataBudget"] = None) -> StateT:
    """Feed every non-null cell to the sink.

    Positional ``[k]`` columns reach the sink as ``[*]``, the only array step
    dependencies are stated over.
    """
    state = sink.initialize()
    update = sink.update
    mined = {column: column.generalized() for column in table.columns}
    for row in table.rows:
        for path, value in row.cells.items():
            if value is not None:
                update(state, row.doc_id, mined[path], value)
    if budget is not None:
        budget.check(sink.size_hint(state))
    return state


def collect(
    collection: DocumentCollection,
    sink: MetadataSink[StateT],
    mode: Union[UnrollMode, str] = UnrollMode.DYNAMIC,
    threads: int = 1,
    budget: Optional["MetadataBudget"] = None,
) -> Tuple[StateT, UnrollStats]:
    mode = UnrollMode(mode)
    n_docs = len(collection)
    if mode is UnrollMode.STATIC:
        table = static_unroll(collection, budget)
        state = collect_rows(table, sink, budget)
        stats = UnrollStats(mode, n_docs, len(table.rows), table.expansion_factor)
    else:
        state = dynamic_unroll(collection, sink, threads=threads, budget=budget)
        rows = sum(count_unrolled_rows(doc.root) for doc in collection)
        stats = UnrollStats(mode, n_docs, n_docs, rows / n_docs if n_docs else 1.0)
    logger.info(
        f"Collected {type(sink).__name__} metadata ({mode.value}): "
        f"{stats.rows_processed} rows processed, expansion factor {stats.expansion_factor:.2f}"
    )
    return state, stats
