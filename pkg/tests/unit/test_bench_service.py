# tests/unit/test_bench_service.py
import pytest

from nestprof.config import Settings
from nestprof.models.schemas import BenchRequest
from nestprof.services.bench_service import STATUS_OK, STATUS_SKIPPED, BenchService
from nestprof.services.budget_service import MetadataBudget


class TestBenchService:
    @pytest.fixture
    def service(self):
        return BenchService(Settings(_env_file=None), MetadataBudget(max_mem_mb=None))

    def test_complexity_sweep(self, service):
        request = BenchRequest(algorithms=["spider"], sizes=[8], array_lens=[2, 3], nesting_depths=[1, 3])
        runs = service.run(request)
        assert len(runs) == 8
        assert set(runs["status"]) == {STATUS_OK}
        factors = runs.groupby("array_len")["expansion_factor"].unique()
        assert list(factors[2]) == [4.0]
        assert list(factors[3]) == [9.0]
        assert sorted(runs["max_nesting"].unique()) == [2, 3]

    def test_static_rows_follow_the_expansion_factor(self, service):
        runs = service.run(BenchRequest(algorithms=["demarchi"], sizes=[5], array_lens=[3]))
        static = runs[runs["unroll"] == "static"].iloc[0]
        dynamic = runs[runs["unroll"] == "dynamic"].iloc[0]
        assert static["rows_processed"] == 5 * 9
        assert dynamic["rows_processed"] == 5

    def test_summary_has_one_row_per_collection(self, service):
        request = BenchRequest(algorithms=["spider", "demarchi"], sizes=[6], array_lens=[2, 4])
        summary = service.summarize(service.run(request))
        assert len(summary) == 4
        assert {"expansion_factor", "avg_attribute_values", "static", "dynamic", "speedup"} <= set(summary.columns)
        assert sorted(summary["expansion_factor"].unique()) == [4.0, 16.0]

    def test_fd_runs_above_the_limit_are_skipped(self, service):
        runs = service.run(BenchRequest(algorithms=["fdep"], unroll_modes=["dynamic"], sizes=[12], array_lens=[2], fd_size_limit=10))
        assert list(runs["status"]) == [STATUS_SKIPPED]
        summary = service.summarize(runs)
        assert len(summary) == 1
        assert summary["dynamic"].isna().all()

    def test_axes_must_not_be_empty(self):
        with pytest.raises(ValueError):
            BenchRequest(array_lens=[])
