"""Parsing, cleaning rules and empirical level construction."""

import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levelfit.errors import (
    DataError,
    EmptyLevelError,
    MixedLevelError,
    ParameterError,
    ParseError,
    SchemaError,
)
from levelfit.ingestion import (
    ATTEMPTS_CSV_COLUMNS,
    AttemptRecord,
    EmpiricalLevelData,
    IngestionConfig,
    build_level_data,
    filter_attempts,
    filter_attempts_with_stats,
    group_by_level,
    infer_move_limit,
    load_histogram_json,
    parse_attempts,
    write_attempts_csv,
)

HEADER = ",".join(ATTEMPTS_CSV_COLUMNS)


def rec(
    moves=5,
    success=True,
    aborted=False,
    booster=False,
    extra=False,
    level="L1",
    player="p1",
    attempt=1,
):
    return AttemptRecord(
        level_id=level,
        player_id=player,
        attempt_index=attempt,
        moves_used=moves,
        success=success,
        aborted=aborted,
        used_booster=booster,
        used_extra_moves=extra,
    )


def csv_bytes(rows: list[str]) -> io.BytesIO:
    return io.BytesIO(("\n".join([HEADER] + rows) + "\n").encode())


class TestParse:
    def test_three_valid_rows(self):
        rows = [
            "L1,p1,1,12,true,false,false,false",
            "L1,p1,2,20,false,false,false,false",
            "L1,p2,1,8,true,false,true,false",
        ]
        records = list(parse_attempts(csv_bytes(rows)))
        assert len(records) == 3
        assert records[0].moves_used == 12
        assert records[1].success is False
        assert records[2].used_booster is True

    def test_row_order_preserved(self):
        rows = [f"L1,p{i},1,{i + 1},true,false,false,false" for i in range(10)]
        records = list(parse_attempts(csv_bytes(rows)))
        assert [r.moves_used for r in records] == list(range(1, 11))

    def test_bad_integer_carries_row_number(self):
        rows = [
            "L1,p1,1,12,true,false,false,false",
            "L1,p1,2,abc,false,false,false,false",
        ]
        with pytest.raises(ParseError) as err:
            list(parse_attempts(csv_bytes(rows)))
        assert err.value.row == 3  # header is line 1

    def test_bad_boolean_rejected(self):
        rows = ["L1,p1,1,12,TRUE,false,false,false"]
        with pytest.raises(ParseError):
            list(parse_attempts(csv_bytes(rows)))

    def test_empty_file_with_header(self):
        assert list(parse_attempts(csv_bytes([]))) == []

    def test_unknown_column_is_schema_error(self):
        stream = io.BytesIO((HEADER + ",bonus\n").encode())
        with pytest.raises(SchemaError):
            list(parse_attempts(stream))

    def test_missing_column_is_schema_error(self):
        stream = io.BytesIO(b"level_id,player_id\nL1,p1\n")
        with pytest.raises(SchemaError):
            list(parse_attempts(stream))

    def test_success_and_aborted_conflict(self):
        rows = ["L1,p1,1,12,true,true,false,false"]
        with pytest.raises(ParseError):
            list(parse_attempts(csv_bytes(rows)))

    def test_jsonl_round(self):
        lines = [
            json.dumps(
                {
                    "level_id": "L1",
                    "player_id": "p1",
                    "attempt_index": 1,
                    "moves_used": 9,
                    "success": True,
                    "aborted": False,
                    "used_booster": False,
                    "used_extra_moves": False,
                }
            )
        ]
        records = list(
            parse_attempts(io.BytesIO("\n".join(lines).encode()), format="json-lines")
        )
        assert records == [rec(moves=9)]

    def test_csv_round_trip(self, tmp_path):
        records = [rec(moves=m, player=f"p{m}") for m in (3, 5, 8)]
        path = tmp_path / "attempts.csv"
        assert write_attempts_csv(records, path) == 3
        assert list(parse_attempts(path)) == records


class TestFilter:
    CONFIG = IngestionConfig()

    def test_aborted_removed(self):
        kept = filter_attempts([rec(aborted=True, success=False)], self.CONFIG, 20)
        assert kept == []

    def test_booster_near_limit_removed(self):
        kept = filter_attempts([rec(moves=19, booster=True)], self.CONFIG, 20)
        assert kept == []

    def test_clean_success_retained(self):
        r = rec()
        assert filter_attempts([r], self.CONFIG, 20) == [r]

    def test_extra_moves_flag(self):
        r = rec(moves=23, extra=True)
        assert filter_attempts([r], self.CONFIG, 20) == []
        keep_config = IngestionConfig(drop_extra_move_attempts=False)
        assert filter_attempts([r], keep_config, 20) == [r]

    def test_restrict_attempt_index(self):
        records = [rec(attempt=1), rec(attempt=2), rec(attempt=3)]
        config = IngestionConfig(restrict_attempt_index=2)
        kept = filter_attempts(records, config, 20)
        assert [r.attempt_index for r in kept] == [2]

    def test_mixed_levels_rejected(self):
        with pytest.raises(MixedLevelError):
            filter_attempts([rec(level="L1"), rec(level="L2")], self.CONFIG, 20)

    def test_count_conservation_partition(self):
        records = [
            rec(),
            rec(aborted=True, success=False),
            rec(booster=True, moves=20),
            rec(booster=True, moves=5),
            rec(extra=True, moves=25),
            rec(attempt=2),
        ]
        config = IngestionConfig(restrict_attempt_index=1)
        kept, stats = filter_attempts_with_stats(records, config, 20)
        assert stats.retained == len(kept) == 1
        assert stats.dropped_aborted == 1
        assert stats.dropped_booster == 2
        assert stats.booster_drops_in_window == 1  # only the one at moves 20
        assert stats.dropped_extra_moves == 1
        assert stats.dropped_attempt_index == 1
        assert stats.input_count == len(records)

    def test_window_larger_than_limit_rejected(self):
        with pytest.raises(ParameterError):
            filter_attempts([rec()], IngestionConfig(booster_window_k=25), 20)

    @settings(max_examples=40, deadline=None)
    @given(
        flags=st.lists(
            st.tuples(st.booleans(), st.booleans(), st.booleans()), max_size=30
        )
    )
    def test_idempotent(self, flags):
        records = []
        for i, (aborted, booster, extra) in enumerate(flags):
            records.append(
                rec(
                    moves=20 if aborted else 5,
                    success=not aborted,
                    aborted=aborted,
                    booster=booster and not aborted,
                    extra=extra and not aborted,
                    player=f"p{i}",
                )
            )
        once = filter_attempts(records, self.CONFIG, 20)
        twice = filter_attempts(once, self.CONFIG, 20)
        assert twice == once


class TestBuildLevelData:
    def test_worked_example(self):
        records = [rec(moves=m, player=f"s{i}") for i, m in enumerate([5, 6, 6, 8])]
        records += [
            rec(moves=10, success=False, player=f"f{i}") for i in range(6)
        ]
        level = build_level_data(records, move_limit=10)
        freq = level.frequencies()
        assert freq[4] == pytest.approx(0.1)
        assert freq[5] == pytest.approx(0.2)
        assert freq[7] == pytest.approx(0.1)
        assert level.completion_rate == pytest.approx(0.4)
        assert level.total_attempts == 10

    def test_all_failures_flagged_empty(self):
        records = [rec(moves=10, success=False, player=f"f{i}") for i in range(10)]
        level = build_level_data(records, move_limit=10)
        assert level.histogram == {}
        assert level.completion_rate == 0.0

    def test_completion_rate_identity(self):
        records = [rec(moves=m, player=f"s{m}") for m in (1, 4, 9)] + [
            rec(moves=10, success=False, player="f0")
        ]
        level = build_level_data(records, move_limit=10)
        assert float(level.frequencies().sum()) == level.completion_rate

    def test_out_of_range_success_rejected(self):
        with pytest.raises(DataError):
            build_level_data([rec(moves=11)], move_limit=10)
        with pytest.raises(DataError):
            build_level_data([rec(moves=0)], move_limit=10)

    def test_zero_records_rejected(self):
        with pytest.raises(EmptyLevelError):
            build_level_data([], move_limit=10, level_id="L1")

    def test_mixed_levels_rejected(self):
        with pytest.raises(MixedLevelError):
            build_level_data([rec(level="L1"), rec(level="L2")], move_limit=10)


class TestEmpiricalLevelData:
    def test_from_counts_validation(self):
        with pytest.raises(DataError):
            EmpiricalLevelData.from_counts("L1", 10, {11: 1}, 10)
        with pytest.raises(DataError):
            EmpiricalLevelData.from_counts("L1", 10, {0: 1}, 10)
        with pytest.raises(DataError):
            EmpiricalLevelData.from_counts("L1", 10, {5: 11}, 10)
        with pytest.raises(EmptyLevelError):
            EmpiricalLevelData.from_counts("L1", 10, {}, 0)

    def test_json_round_trip(self, tmp_path):
        level = EmpiricalLevelData.from_counts("L7", 12, {3: 4, 7: 1}, 50)
        path = tmp_path / "histograms.json"
        path.write_text(json.dumps([level.to_json_dict()]))
        loaded = load_histogram_json(path)
        assert loaded == [level]

    def test_histogram_json_single_object(self, tmp_path):
        level = EmpiricalLevelData.from_counts("L7", 12, {3: 4}, 50)
        path = tmp_path / "one.json"
        path.write_text(json.dumps(level.to_json_dict()))
        assert load_histogram_json(path) == [level]

    def test_bad_entry_is_schema_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps([{"level_id": "L1"}]))
        with pytest.raises(SchemaError):
            load_histogram_json(path)


class TestHelpers:
    def test_group_by_level_preserves_order(self):
        records = [
            rec(level="A", moves=1),
            rec(level="B", moves=2),
            rec(level="A", moves=3),
        ]
        groups = group_by_level(records)
        assert [r.moves_used for r in groups["A"]] == [1, 3]
        assert [r.moves_used for r in groups["B"]] == [2]

    def test_infer_move_limit_from_failures(self):
        records = [rec(moves=4), rec(moves=25, success=False)]
        assert infer_move_limit(records) == 25

    def test_infer_move_limit_fallback_to_successes(self):
        records = [rec(moves=4), rec(moves=9)]
        assert infer_move_limit(records) == 9

    def test_infer_move_limit_ignores_extra_move_attempts(self):
        records = [rec(moves=30, success=False, extra=True), rec(moves=25, success=False)]
        assert infer_move_limit(records) == 25

    def test_infer_move_limit_needs_data(self):
        with pytest.raises(DataError):
            infer_move_limit([])
