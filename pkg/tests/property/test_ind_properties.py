# tests/property/test_ind_properties.py
from fractions import Fraction

import pytest

from nestprof.core.approx import Threshold
from nestprof.core.ind_mining import demarchi_collect, demarchi_mine, spider_collect, spider_mine
from nestprof.core.json_model import enumerate_paths
from nestprof.core.oracle import exact_nind_set, validate_nind
from nestprof.exceptions import MiningError
from nestprof.models.schemas import UnrollMode

SEEDS = range(200)


def satisfied_pairs(dependencies):
    return {(dep.lhs, dep.rhs) for dep in dependencies if dep.satisfied}


class TestInclusionAgainstOracle:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_exact_mining_matches_brute_force(self, make_collection, seed):
        collection = make_collection(seed, max_docs=50, n_keys=6)
        if not enumerate_paths(collection):
            with pytest.raises(MiningError):
                spider_mine(spider_collect(collection), Threshold(Fraction(1)))
            return
        expected = exact_nind_set(collection)
        exact = Threshold(Fraction(1))
        assert satisfied_pairs(spider_mine(spider_collect(collection), exact)) == expected
        assert satisfied_pairs(demarchi_mine(demarchi_collect(collection), exact)) == expected

    @pytest.mark.parametrize("seed", range(0, 200, 5))
    def test_strengths_match_brute_force(self, make_collection, seed):
        collection = make_collection(seed)
        if not enumerate_paths(collection):
            return
        for dep in spider_mine(spider_collect(collection), Threshold.parse("0.5")):
            valid, strength = validate_nind(collection, dep.lhs, dep.rhs)
            assert dep.strength == strength
            assert (dep.strength == 1) == valid


class TestInclusionAxioms:
    @pytest.mark.parametrize("seed", range(0, 200, 4))
    def test_transitivity(self, make_collection, seed):
        collection = make_collection(seed)
        if not enumerate_paths(collection):
            return
        valid = satisfied_pairs(spider_mine(spider_collect(collection), Threshold(Fraction(1))))
        for p, q in valid:
            for q2, r in valid:
                if q == q2 and p != r:
                    assert (p, r) in valid

    @pytest.mark.parametrize("seed", range(500))
    def test_reflexivity_holds(self, make_collection, seed):
        collection = make_collection(seed)
        for path in enumerate_paths(collection):
            assert validate_nind(collection, path, path) == (True, Fraction(1))

    @pytest.mark.parametrize("seed", range(0, 200, 4))
    def test_no_reflexive_output(self, make_collection, seed):
        collection = make_collection(seed)
        if not enumerate_paths(collection):
            return
        assert all(dep.lhs != dep.rhs for dep in spider_mine(spider_collect(collection)))


class TestInclusionStrategies:
    @pytest.mark.parametrize("seed", range(50))
    @pytest.mark.parametrize("arrays", [False, True])
    def test_static_and_dynamic_agree(self, make_collection, seed, arrays):
        collection = make_collection(seed, arrays=arrays)
        if not enumerate_paths(collection):
            return
        static = spider_collect(collection, mode=UnrollMode.STATIC)
        dynamic = spider_collect(collection, mode=UnrollMode.DYNAMIC)
        assert static == dynamic
        assert demarchi_collect(collection, mode=UnrollMode.STATIC) == demarchi_collect(collection)

    @pytest.mark.parametrize("seed", range(50))
    def test_threads_do_not_change_results(self, make_collection, seed):
        collection = make_collection(seed)
        if not enumerate_paths(collection):
            return
        threshold = Threshold.parse("0.6")
        single = spider_mine(spider_collect(collection), threshold)
        assert spider_mine(spider_collect(collection, threads=3), threshold) == single
        assert demarchi_mine(demarchi_collect(collection, threads=4), threshold) == single
