# nestprof/services/bench_service.py
"""
Timing matrix of algorithm x unrolling strategy on generated data, laid out
like the usual static-versus-dynamic runtime table: one row per algorithm and
collection, one column per strategy, plus the speed-up of dynamic over static.

Collections vary on two axes. Size is the document count; complexity is the
array length and nesting depth of every generated document, which drives the
expansion factor static unrolling pays for.
"""
import logging
from itertools import product
from typing import Dict, List, Optional

import pandas as pd

from nestprof.config import Settings, get_settings
from nestprof.core.datagen import generate
from nestprof.exceptions import ResourceLimitError
from nestprof.models.schemas import Algorithm, BenchRequest, CollectionStats, GenSpec, MiningRequest, UnrollMode
from nestprof.services.budget_service import MetadataBudget, create_budget
from nestprof.services.profiling_service import ProfilingService

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_SKIPPED = "skipped"
STATUS_OUT_OF_MEMORY = "out of memory"

COLLECTION_COLUMNS = ["n_docs", "array_len", "nesting_depth", "expansion_factor", "avg_attribute_values", "max_nesting"]


class BenchService:
    def __init__(self, settings: Optional[Settings] = None, budget: Optional[MetadataBudget] = None):
        self.settings = settings or get_settings()
        self.budget = budget or create_budget(self.settings)
        self.profiler = ProfilingService(self.settings, self.budget)

    def gen_spec(self, request: BenchRequest, size: int, array_len: int, nesting_depth: int) -> GenSpec:
        return GenSpec(
            seed=request.seed,
            n_docs=size,
            n_scalar_keys=2,
            n_array_keys=request.n_array_keys,
            array_len=array_len,
            nesting_depth=nesting_depth,
        )

    def run(self, request: BenchRequest) -> pd.DataFrame:
        """One row per (collection, algorithm, unroll) run."""
        runs: List[Dict[str, object]] = []
        axes = product(sorted(set(request.sizes)), sorted(set(request.array_lens)), sorted(set(request.nesting_depths)))
        for size, array_len, nesting_depth in axes:
            collection = generate(self.gen_spec(request, size, array_len, nesting_depth))
            shape = self.profiler.describe(collection)
            described = self._collection_row(shape, array_len, nesting_depth)
            for algorithm in request.algorithms:
                for unroll in request.unroll_modes:
                    runs.append({**described, **self._run_one(collection, request, algorithm, unroll, size)})
        return pd.DataFrame(runs).astype({"total_s": float})

    @staticmethod
    def _collection_row(shape: CollectionStats, array_len: int, nesting_depth: int) -> Dict[str, object]:
        return {
            "n_docs": shape.n_docs,
            "array_len": array_len,
            "nesting_depth": nesting_depth,
            "expansion_factor": shape.expansion_factor,
            "avg_attribute_values": shape.avg_attribute_values,
            "max_nesting": shape.max_nesting,
        }

    def _run_one(self, collection, request: BenchRequest, algorithm: Algorithm, unroll: UnrollMode, size: int):
        row: Dict[str, object] = {"algorithm": algorithm.value, "unroll": unroll.value}
        if request.fd_size_limit is not None and algorithm.kind.value == "fd" and size > request.fd_size_limit:
            logger.info(f"Skipping {algorithm.value} on {size} documents: above the FD size limit")
            return {**row, "status": STATUS_SKIPPED, "total_s": None, "rows_processed": None, "dependencies": None}

        mining = MiningRequest(
            kind=algorithm.kind,
            algorithm=algorithm,
            unroll=unroll,
            threshold=request.threshold,
            max_lhs=request.max_lhs,
        )
        try:
            result = self.profiler.mine(collection, mining)
        except ResourceLimitError as exc:
            logger.warning(f"{algorithm.value}/{unroll.value} on {size} documents hit the memory cap: {exc}")
            return {**row, "status": STATUS_OUT_OF_MEMORY, "total_s": None, "rows_processed": None, "dependencies": None}

        timing = result.timing
        logger.info(
            f"{algorithm.value}/{unroll.value} on {size} documents: "
            f"{timing.phase_collect_s + timing.phase_mine_s:.3f}s"
        )
        return {
            **row,
            "status": STATUS_OK,
            "total_s": timing.phase_collect_s + timing.phase_mine_s,
            "rows_processed": timing.rows_processed,
            "dependencies": len(result.records),
        }

    @staticmethod
    def summarize(runs: pd.DataFrame) -> pd.DataFrame:
        table = runs.set_index(["algorithm"] + COLLECTION_COLUMNS + ["unroll"])["total_s"].unstack("unroll")
        table.columns.name = None
        if {UnrollMode.STATIC.value, UnrollMode.DYNAMIC.value} <= set(table.columns):
            table["speedup"] = table[UnrollMode.STATIC.value] / table[UnrollMode.DYNAMIC.value]
        return table.reset_index()
