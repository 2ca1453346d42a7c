"""Unit tests for the flip selection and coverage protocol."""

from __future__ import annotations

import logging

import pytest

from bfa.flipcore import (
    NO_FLIP,
    CoverageLogError,
    CoverageSink,
    FlipConfigError,
    FlipEnv,
    FlipSelection,
    coverage_from_ids,
    flip_point,
    read_coverage_log,
    resolve_flip_env,
)


class TestResolveFlipEnv:
    def test_unset_means_no_flip(self):
        assert resolve_flip_env({}) == NO_FLIP

    @pytest.mark.parametrize("raw", ["", "0", " 0 ", "  "])
    def test_disabled_spellings(self, raw):
        assert resolve_flip_env({"BFA_FLIP": raw}) == NO_FLIP

    @pytest.mark.parametrize("raw,flip_id", [("3", 3), (" 12 ", 12), ("007", 7)])
    def test_positive_ids(self, raw, flip_id):
        assert resolve_flip_env({"BFA_FLIP": raw}).selected == flip_id

    @pytest.mark.parametrize("raw", ["-1", "1.5", "abc", "0x2", "2a", "٣"])
    def test_rejects_non_digit_values(self, raw):
        with pytest.raises(FlipConfigError):
            resolve_flip_env({"BFA_FLIP": raw})

    def test_custom_variable_name(self):
        env = FlipEnv(flip_var_name="OTHER_FLIP")
        assert resolve_flip_env({"OTHER_FLIP": "4"}, env).selected == 4


class TestFlipSelection:
    def test_no_flip_selects_nothing(self):
        assert NO_FLIP.selected is None

    def test_rejects_nonpositive_ids(self):
        with pytest.raises(ValueError):
            FlipSelection(0)
        with pytest.raises(ValueError):
            FlipSelection(-3)


class TestFlipPoint:
    def test_identity_without_selection(self):
        assert flip_point(1, True, NO_FLIP) is True
        assert flip_point(1, False, NO_FLIP) is False

    def test_selected_id_inverts(self):
        sel = FlipSelection(2)
        assert flip_point(2, True, sel) is False
        assert flip_point(2, False, sel) is True

    def test_other_ids_unaffected(self):
        sel = FlipSelection(2)
        assert flip_point(1, True, sel) is True
        assert flip_point(3, False, sel) is False

    def test_truthy_condition_coerces(self):
        assert flip_point(1, "nonempty", NO_FLIP) is True
        assert flip_point(1, 0, NO_FLIP) is False

    def test_records_coverage_even_when_not_flipped(self):
        sink = CoverageSink()
        flip_point(5, True, NO_FLIP, sink)
        flip_point(5, False, NO_FLIP, sink)
        flip_point(2, True, NO_FLIP, sink)
        assert sink.snapshot().ids == [5, 2]


class TestCoverageSink:
    def test_first_occurrence_order_dedup(self):
        sink = CoverageSink()
        for flip_id in [3, 1, 3, 2, 1]:
            sink.record(flip_id)
        assert sink.snapshot().ids == [3, 1, 2]

    def test_write_appends_one_id_per_line(self, tmp_path):
        path = tmp_path / "cov.log"
        sink = CoverageSink()
        sink.record(4)
        sink.record(1)
        sink.write_to(path)
        assert path.read_text() == "4\n1\n"
        other = CoverageSink()
        other.record(9)
        other.write_to(path)
        assert path.read_text() == "4\n1\n9\n"


class TestReadCoverageLog:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "cov.log"
        path.write_text("2\n7\n2\n1\n")
        record = read_coverage_log(path)
        assert record.ids == [2, 7, 1]
        assert record.as_set() == {1, 2, 7}
        assert 7 in record and 9 not in record
        assert len(record) == 3

    def test_missing_file_is_empty_with_warning(self, tmp_path, caplog):
        with caplog.at_level(logging.WARNING):
            record = read_coverage_log(tmp_path / "absent.log")
        assert record.ids == []
        assert any("absent.log" in m for m in caplog.messages)

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "cov.log"
        path.write_text("3\n\n5\n\n")
        assert read_coverage_log(path).ids == [3, 5]

    def test_garbage_line_reports_position(self, tmp_path):
        path = tmp_path / "cov.log"
        path.write_text("3\nnope\n5\n")
        with pytest.raises(CoverageLogError) as err:
            read_coverage_log(path)
        assert "line 2" in str(err.value)

    def test_coverage_from_ids_dedups(self):
        assert coverage_from_ids([2, 2, 4]).ids == [2, 4]


def test_flip_env_defaults():
    env = FlipEnv()
    assert env.flip_var_name == "BFA_FLIP"
    assert env.coverage_path_var_name == "BFA_COVERAGE_FILE"
