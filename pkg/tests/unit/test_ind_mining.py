# tests/unit/test_ind_mining.py
from collections import Counter
from fractions import Fraction

import pytest

from nestprof.core.approx import Threshold
from nestprof.core.ind_mining import (
    demarchi_collect,
    demarchi_mine,
    inclusion_counts,
    spider_collect,
    spider_mine,
)
from nestprof.core.json_model import Atomic, DocumentCollection, Path, ValueTag
from nestprof.exceptions import MiningError

A = Path.parse("$.a[*]")
B = Path.parse("$.b[*]")


def s(value):
    return Atomic(ValueTag.STRING, value)


def strengths(dependencies):
    return {(str(dep.lhs), str(dep.rhs)): dep.strength for dep in dependencies}


def shared_value_counts(meta):
    counts = Counter()
    for paths in meta.values():
        counts.update((lhs, rhs) for lhs in paths for rhs in paths)
    return dict(counts)


class TestSpider:
    def test_collect_sorted_distinct_values(self, approximate):
        assert spider_collect(approximate) == {A: [s("X"), s("Y")], B: [s("X"), s("Y"), s("Z")]}

    def test_collect_scalar_paths(self, linked):
        meta = spider_collect(linked)
        assert {atom.content for atom in meta[Path.parse("$.parent")]} == {5, 2}

    def test_partial_inclusion_strength(self, approximate):
        found = strengths(spider_mine(spider_collect(approximate), Threshold.parse("0.6")))
        assert found[("$.b[*]", "$.a[*]")] == Fraction(2, 3)
        assert found[("$.a[*]", "$.b[*]")] == 1

    def test_satisfied_follows_threshold(self, approximate):
        meta = spider_collect(approximate)
        by_pair = {(str(d.lhs), str(d.rhs)): d.satisfied for d in spider_mine(meta, Threshold.parse("0.6"))}
        assert by_pair[("$.b[*]", "$.a[*]")]
        by_pair = {(str(d.lhs), str(d.rhs)): d.satisfied for d in spider_mine(meta, Threshold.parse("0.7"))}
        assert not by_pair[("$.b[*]", "$.a[*]")]

    def test_scalar_reference_is_exact(self, linked):
        found = {(str(d.lhs), str(d.rhs)): d for d in spider_mine(spider_collect(linked), Threshold(Fraction(1)))}
        assert found[("$.parent", "$.id")].strength == 1
        assert found[("$.parent", "$.id")].satisfied
        assert found[("$.rel[*]", "$.id")].satisfied

    def test_reflexive_pairs_are_suppressed(self, approximate):
        assert all(dep.lhs != dep.rhs for dep in spider_mine(spider_collect(approximate)))

    def test_output_is_sorted(self, linked):
        dependencies = spider_mine(spider_collect(linked))
        assert [dep.sort_key for dep in dependencies] == sorted(dep.sort_key for dep in dependencies)

    def test_diagonal_counts_every_value(self, linked):
        totals, included = inclusion_counts(spider_collect(linked))
        for path, total in totals.items():
            assert included[(path, path)] == total

    def test_shared_values_credit_both_paths(self, approximate):
        totals, included = inclusion_counts(spider_collect(approximate))
        assert totals == {A: 2, B: 3}
        assert included[(A, B)] == 2
        assert included[(B, A)] == 2

    def test_off_diagonal_counts_match_demarchi(self, linked, amazon):
        for collection in (linked, amazon):
            assert inclusion_counts(spider_collect(collection))[1] == shared_value_counts(demarchi_collect(collection))

    def test_empty_metadata_has_no_paths(self):
        meta = spider_collect(DocumentCollection.from_values([]))
        assert meta == {}
        with pytest.raises(MiningError, match="no paths"):
            spider_mine(meta)

    def test_numbers_and_strings_never_match(self):
        collection = DocumentCollection.from_values([{"n": 1, "t": "1"}])
        found = strengths(spider_mine(spider_collect(collection)))
        assert found[("$.n", "$.t")] == 0


class TestDeMarchi:
    def test_collect_inverts_the_map(self, approximate):
        meta = demarchi_collect(approximate)
        assert meta[s("X")] == {A, B}
        assert meta[s("Z")] == {B}

    def test_single_document(self):
        meta = demarchi_collect(DocumentCollection.from_values([{"k": 1}]))
        assert meta == {Atomic(ValueTag.NUMBER, 1): {Path.parse("$.k")}}

    def test_matches_spider(self, approximate, linked, amazon):
        for collection in (approximate, linked, amazon):
            for threshold in (Threshold(Fraction(1)), Threshold.parse("0.5")):
                assert demarchi_mine(demarchi_collect(collection), threshold) == spider_mine(
                    spider_collect(collection), threshold
                )

    def test_one_path_gives_nothing(self):
        meta = demarchi_collect(DocumentCollection.from_values([{"k": 1}, {"k": 2}]))
        assert demarchi_mine(meta) == []

    def test_empty_metadata_has_no_paths(self):
        with pytest.raises(MiningError):
            demarchi_mine({})


class TestThreadedCollect:
    def test_merged_states_match_single_worker(self, linked, amazon):
        for collection in (linked, amazon):
            assert spider_collect(collection, threads=4) == spider_collect(collection)
            assert demarchi_collect(collection, threads=4) == demarchi_collect(collection)
