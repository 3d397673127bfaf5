# tests/unit/test_schemas.py
import json
from fractions import Fraction

import pytest
from pydantic import ValidationError

from nestprof.models.schemas import (
    Algorithm,
    DependencyKind,
    DependencyRecord,
    MiningRequest,
    TimingRecord,
    format_strength,
)


class TestFormatStrength:
    @pytest.mark.parametrize(
        "strength, expected",
        [
            (Fraction(2, 3), "0.666667"),
            (Fraction(1), "1.000000"),
            (Fraction(0), "0.000000"),
            (Fraction(199, 200), "0.995000"),
            (Fraction(1, 3), "0.333333"),
        ],
    )
    def test_six_digits(self, strength, expected):
        assert format_strength(strength) == expected


class TestMiningRequest:
    def test_defaults(self):
        request = MiningRequest(kind="ind", algorithm="spider")
        assert request.unroll.value == "dynamic"
        assert request.threshold_fraction == Fraction(99, 100)

    def test_algorithm_kinds(self):
        assert Algorithm.DEMARCHI.kind is DependencyKind.IND
        assert Algorithm.FDEP.kind is DependencyKind.FD

    def test_mismatched_algorithm(self):
        with pytest.raises(ValidationError, match="mines fd dependencies"):
            MiningRequest(kind="ind", algorithm="tane")

    @pytest.mark.parametrize("threshold", [0, -0.1, 1.5])
    def test_threshold_range(self, threshold):
        with pytest.raises(ValidationError):
            MiningRequest(kind="fd", algorithm="tane", threshold=threshold)

    def test_max_lhs_must_be_positive(self):
        with pytest.raises(ValidationError):
            MiningRequest(kind="fd", algorithm="fdep", max_lhs=0)


class TestRecords:
    def test_dependency_line(self):
        record = DependencyRecord(kind="nind", lhs=["$.b[*]"], rhs="$.a[*]", strength=Fraction(2, 3), satisfied=True)
        line = record.to_json_line()
        assert line == '{"kind": "nind", "lhs": ["$.b[*]"], "rhs": "$.a[*]", "strength": 0.666667, "satisfied": true}'
        assert json.loads(line)["strength"] == pytest.approx(2 / 3, abs=1e-6)

    def test_non_ascii_paths_are_kept(self):
        record = DependencyRecord(kind="nfd", lhs=["$.größe"], rhs="$.x", strength=Fraction(1), satisfied=True)
        assert "größe" in record.to_json_line()

    def test_timing_line(self):
        timing = TimingRecord(phase_collect_s=0.1234567, phase_mine_s=2.0, rows_processed=4, expansion_factor=4.0)
        assert json.loads(timing.to_json_line()) == {
            "phase_collect_s": 0.123457,
            "phase_mine_s": 2.0,
            "rows_processed": 4,
            "expansion_factor": 4.0,
        }
