# tests/unit/test_bitmap.py
import pytest

from nestprof.core.bitmap import PairBitmap, clique_indices, pair_from_index, pair_index


class TestPairIndex:
    def test_dense_ordering(self):
        assert [pair_index(1, 2), pair_index(1, 3), pair_index(2, 3), pair_index(1, 4)] == [0, 1, 2, 3]

    def test_unordered(self):
        assert pair_index(4, 2) == pair_index(2, 4)

    def test_inverse(self):
        for index in range(500):
            i, j = pair_from_index(index)
            assert i < j
            assert pair_index(i, j) == index

    def test_self_pairs_have_no_index(self):
        with pytest.raises(ValueError):
            pair_index(3, 3)

    def test_ids_start_at_one(self):
        with pytest.raises(ValueError):
            pair_index(0, 2)

    def test_clique_indices(self):
        assert sorted(clique_indices([3, 1, 2]).tolist()) == [0, 1, 2]
        assert clique_indices([5]).size == 0


class TestPairBitmap:
    def test_from_cliques_unions_groups(self):
        bitmap = PairBitmap.from_cliques([[1, 2, 3], [2, 4], [5]])
        assert sorted(bitmap.pairs()) == [(1, 2), (1, 3), (2, 3), (2, 4)]

    def test_membership_ignores_order(self):
        bitmap = PairBitmap.from_pairs([(1, 3)])
        assert (3, 1) in bitmap
        assert (1, 2) not in bitmap
        assert (2, 2) not in bitmap

    def test_set_operations(self):
        left = PairBitmap.from_pairs([(1, 2), (1, 3), (2, 3)])
        right = PairBitmap.from_pairs([(1, 3), (2, 4)])
        assert sorted((left & right).pairs()) == [(1, 3)]
        assert sorted((left - right).pairs()) == [(1, 2), (2, 3)]
        assert len(left | right) == 4
        assert (left & right) <= left
        assert not left <= right

    def test_intersection_of_many(self):
        bitmaps = [PairBitmap.from_pairs(pairs) for pairs in ([(1, 2), (1, 3)], [(1, 3), (2, 3)], [(1, 3)])]
        assert PairBitmap.intersection(bitmaps) == PairBitmap.from_pairs([(1, 3)])

    def test_descending_iteration(self):
        bitmap = PairBitmap.from_pairs([(2, 3), (1, 4), (3, 4)])
        assert list(bitmap.pairs_descending()) == [(3, 4), (1, 4), (2, 3)]

    def test_empty_bitmap_is_falsy(self):
        assert not PairBitmap()
        assert len(PairBitmap.from_cliques([])) == 0
