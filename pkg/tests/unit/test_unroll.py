# tests/unit/test_unroll.py
import io

import pytest

from nestprof.core.datagen import generate
from nestprof.core.ind_mining import demarchi_collect, spider_collect
from nestprof.core.json_model import ROOT, DocumentCollection, Path
from nestprof.core.unroll import (
    MetadataSink,
    collect,
    count_unrolled_rows,
    dynamic_unroll,
    export_csv,
    flatten,
    static_unroll,
)
from nestprof.exceptions import ResourceLimitError
from nestprof.models.schemas import GenSpec, UnrollMode
from nestprof.services.budget_service import MetadataBudget


class RecordingSink(MetadataSink[list]):
    def initialize(self):
        return []

    def update(self, state, doc_id, path, value):
        state.append((doc_id, str(path), value.content))

    def size_hint(self, state):
        return len(state)


def rows_as_text(table):
    return [{str(path): (cell.content if cell else None) for path, cell in row.cells.items()} for row in table.rows]


class TestStaticUnroll:
    def test_product_document_unrolls_to_four_rows(self, amazon):
        table = static_unroll(amazon)
        assert len(table.rows) == 4
        assert table.expansion_factor == 4.0
        assert [str(column) for column in table.columns] == sorted([
            "$.asin",
            "$.salesRank.Music",
            "$.related.also_viewed[*]",
            "$.related.buy_after_viewing[*]",
            "$.categories[*][0]",
            "$.categories[*][1]",
        ])

    def test_product_rows_pair_every_viewed_item_with_every_category(self, amazon):
        rows = rows_as_text(static_unroll(amazon))
        combos = {(row["$.related.also_viewed[*]"], row["$.categories[*][0]"], row["$.categories[*][1]"]) for row in rows}
        assert combos == {
            ("B00284G31G", "CDs & Vinyl", "Classical"),
            ("B001HADE96", "CDs & Vinyl", "Classical"),
            ("B00284G31G", "Musical Instruments", "Instrument Acc."),
            ("B001HADE96", "Musical Instruments", "Instrument Acc."),
        }
        assert {row["$.salesRank.Music"] for row in rows} == {513528}

    def test_flat_document_is_one_row(self):
        fragments = flatten(ROOT, {"a": 1})
        assert len(fragments) == 1
        assert fragments[0][Path.parse("$.a")].content == 1

    def test_sibling_arrays_cross(self):
        fragments = flatten(ROOT, {"a": [1, 2], "b": [3, 4]})
        pairs = [(f[Path.parse("$.a[*]")].content, f[Path.parse("$.b[*]")].content) for f in fragments]
        assert pairs == [(1, 3), (1, 4), (2, 3), (2, 4)]

    def test_empty_values_become_null_cells(self):
        fragments = flatten(ROOT, {"a": None, "b": []})
        assert fragments == [{Path.parse("$.a"): None, Path.parse("$.b"): None}]

    def test_rows_share_the_column_universe(self):
        table = static_unroll(DocumentCollection.from_values([{"a": 1}, {"b": 2}]))
        for row in table.rows:
            assert set(row.cells) == {Path.parse("$.a"), Path.parse("$.b")}
        assert table.rows[0].cells[Path.parse("$.b")] is None

    def test_array_free_collection_has_factor_one(self):
        table = static_unroll(DocumentCollection.from_values([{"a": 1, "b": {"c": 2}}, {"a": 3}]))
        assert len(table.rows) == 2
        assert table.expansion_factor == 1.0

    def test_generated_arrays_expand_by_product_of_lengths(self):
        collection = generate(GenSpec(n_docs=5, n_scalar_keys=1, n_array_keys=2, array_len=10))
        assert static_unroll(collection).expansion_factor == 100.0

    def test_count_matches_materialised_rows(self, amazon):
        assert count_unrolled_rows(amazon[1].root) == 4
        assert count_unrolled_rows({"a": [1, 2], "b": [3, 4, 5], "c": {}}) == 6

    def test_export_csv(self, amazon):
        buffer = io.StringIO()
        export_csv(static_unroll(amazon), buffer, include_doc_id=True)
        lines = buffer.getvalue().strip().splitlines()
        assert len(lines) == 5
        assert lines[0].startswith("doc_id,$.asin")

    def test_budget_stops_large_tables(self, amazon):
        budget = MetadataBudget(max_mem_mb=1, bytes_per_entry=10**6, check_interval=1)
        with pytest.raises(ResourceLimitError):
            static_unroll(amazon, budget)


class TestDynamicUnroll:
    def test_updates_follow_depth_first_order(self):
        collection = DocumentCollection.from_values([{"a": {"b": 1}, "c": [2, 3]}])
        assert dynamic_unroll(collection, RecordingSink()) == [(1, "$.a.b", 1), (1, "$.c[*]", 2), (1, "$.c[*]", 3)]

    def test_product_leaves(self, amazon):
        updates = dynamic_unroll(amazon, RecordingSink())
        assert (1, "$.related.also_viewed[*]", "B00284G31G") in updates
        assert (1, "$.salesRank.Music", 513528) in updates
        assert (1, "$.categories[*][*]", "Classical") in updates

    def test_empty_values_are_skipped(self):
        assert dynamic_unroll(DocumentCollection.from_values([{"a": None, "b": []}]), RecordingSink()) == []

    def test_repeated_values_arrive_repeatedly(self):
        updates = dynamic_unroll(DocumentCollection.from_values([{"a": [7, 7]}]), RecordingSink())
        assert updates == [(1, "$.a[*]", 7), (1, "$.a[*]", 7)]

    def test_array_free_data_matches_static_rows(self):
        collection = DocumentCollection.from_values([{"a": 1, "b": {"c": "x"}}, {"a": 2, "d": True}])
        static_state, _ = collect(collection, RecordingSink(), mode=UnrollMode.STATIC)
        dynamic_state, _ = collect(collection, RecordingSink(), mode=UnrollMode.DYNAMIC)
        assert sorted(static_state) == sorted(dynamic_state)


class TestCollect:
    def test_static_sinks_see_wildcards_only(self, amazon):
        static_state, _ = collect(amazon, RecordingSink(), mode=UnrollMode.STATIC)
        paths = {path for _doc, path, _value in static_state}
        assert "$.categories[*][*]" in paths
        assert all(Path.parse(path).is_mining_path for path in paths)

    def test_static_and_dynamic_inclusion_metadata_match_on_nested_arrays(self, amazon):
        assert spider_collect(amazon, mode=UnrollMode.STATIC) == spider_collect(amazon, mode=UnrollMode.DYNAMIC)
        assert demarchi_collect(amazon, mode=UnrollMode.STATIC) == demarchi_collect(amazon, mode=UnrollMode.DYNAMIC)

    def test_dynamic_stats_report_documents_and_factor(self, amazon):
        _, stats = collect(amazon, RecordingSink(), mode="dynamic")
        assert stats.rows_processed == 1
        assert stats.expansion_factor == 4.0

    def test_static_stats_report_rows(self, amazon):
        _, stats = collect(amazon, RecordingSink(), mode="static")
        assert stats.rows_processed == 4
        assert stats.expansion_factor == 4.0

    def test_budget_applies_to_sink_state(self):
        collection = DocumentCollection.from_values([{"a": [1, 2, 3]}] * 3)
        budget = MetadataBudget(max_mem_mb=1, bytes_per_entry=10**6, check_interval=1)
        with pytest.raises(ResourceLimitError):
            collect(collection, RecordingSink(), budget=budget)
