"""Attempt-telemetry parsing, cleaning rules and per-level empirical data.

The cleaning rules: incomplete (aborted) attempts are excluded, attempts
using boosters are excluded because they inflate the histogram within a few
moves of the limit, and attempts that bought extra moves are excluded by
default because they shift the effective limit.  What remains is binned
into a right-truncated histogram of moves used by successful attempts.

Empirical frequencies are normalized by the total number of retained
attempts (successes plus failures), so the cumulative empirical frequency
at the move limit equals the observed completion rate exactly.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import (
    DataError,
    EmptyLevelError,
    MixedLevelError,
    ParameterError,
    ParseError,
    SchemaError,
)

__all__ = [
    "ATTEMPTS_CSV_COLUMNS",
    "AttemptRecord",
    "IngestionConfig",
    "FilterStats",
    "EmpiricalLevelData",
    "parse_attempts",
    "filter_attempts",
    "filter_attempts_with_stats",
    "build_level_data",
    "group_by_level",
    "infer_move_limit",
    "load_histogram_json",
    "write_attempts_csv",
]

ATTEMPTS_CSV_COLUMNS = (
    "level_id",
    "player_id",
    "attempt_index",
    "moves_used",
    "success",
    "aborted",
    "used_booster",
    "used_extra_moves",
)


@dataclass(frozen=True)
class AttemptRecord:
    """One player attempt at a level."""

    level_id: str
    player_id: str
    attempt_index: int
    moves_used: int
    success: bool
    aborted: bool
    used_booster: bool
    used_extra_moves: bool

    def __post_init__(self):
        if self.attempt_index < 1:
            raise DataError(f"attempt_index must be >= 1, got {self.attempt_index}")
        if self.moves_used < 0:
            raise DataError(f"moves_used must be >= 0, got {self.moves_used}")
        if self.success and self.aborted:
            raise DataError("an attempt cannot be both successful and aborted")


@dataclass(frozen=True)
class IngestionConfig:
    """Knobs for the cleaning step.

    booster_window_k only feeds diagnostics (how many dropped booster
    attempts finished within k moves of the limit, the region they are known
    to inflate); booster-flagged attempts are dropped regardless of where
    they landed.  restrict_attempt_index keeps only the i-th attempt of each
    player, used to study, e.g., second attempts in isolation.
    """

    booster_window_k: int = 2
    restrict_attempt_index: int | None = None
    drop_extra_move_attempts: bool = True

    def __post_init__(self):
        if self.booster_window_k < 0:
            raise ParameterError("booster_window_k must be >= 0")
        if self.restrict_attempt_index is not None and self.restrict_attempt_index < 1:
            raise ParameterError("restrict_attempt_index must be >= 1 when set")


@dataclass(frozen=True)
class FilterStats:
    """Partition of the input by drop reason; retained + dropped = input."""

    retained: int = 0
    dropped_aborted: int = 0
    dropped_booster: int = 0
    dropped_extra_moves: int = 0
    dropped_attempt_index: int = 0
    booster_drops_in_window: int = 0

    @property
    def input_count(self) -> int:
        return (
            self.retained
            + self.dropped_aborted
            + self.dropped_booster
            + self.dropped_extra_moves
            + self.dropped_attempt_index
        )


@dataclass(frozen=True)
class EmpiricalLevelData:
    """Truncated histogram of moves-to-complete plus the completion rate.

    histogram maps m -> count of successes finishing in exactly m moves for
    1 <= m <= move_limit; total_attempts counts all retained attempts and
    completion_rate is successes / total_attempts.
    """

    level_id: str
    move_limit: int
    histogram: Mapping[int, int]
    total_attempts: int
    completion_rate: float

    @classmethod
    def from_counts(
        cls,
        level_id: str,
        move_limit: int,
        histogram: Mapping[int, int],
        total_attempts: int,
    ) -> "EmpiricalLevelData":
        if move_limit < 1:
            raise DataError(f"move_limit must be >= 1, got {move_limit}")
        if total_attempts < 1:
            raise EmptyLevelError(f"level {level_id!r} has no retained attempts")
        counts = {int(m): int(c) for m, c in histogram.items() if c}
        for m, c in counts.items():
            if c < 0:
                raise DataError(f"negative count {c} at m={m}")
            if not (1 <= m <= move_limit):
                raise DataError(
                    f"histogram mass at m={m} outside (0, {move_limit}] for level {level_id!r}"
                )
        successes = sum(counts.values())
        if successes > total_attempts:
            raise DataError(
                f"histogram holds {successes} successes but only "
                f"{total_attempts} attempts for level {level_id!r}"
            )
        return cls(
            level_id=level_id,
            move_limit=move_limit,
            histogram=counts,
            total_attempts=total_attempts,
            completion_rate=successes / total_attempts,
        )

    @property
    def successes(self) -> int:
        return sum(self.histogram.values())

    def frequencies(self) -> np.ndarray:
        """Empirical frequencies f-hat over m = 1..move_limit."""
        freq = np.zeros(self.move_limit)
        for m, c in self.histogram.items():
            freq[m - 1] = c / self.total_attempts
        return freq

    def to_json_dict(self) -> dict:
        return {
            "level_id": self.level_id,
            "move_limit": self.move_limit,
            "counts": {str(m): c for m, c in sorted(self.histogram.items())},
            "total_attempts": self.total_attempts,
        }


_BOOLS = {"true": True, "false": False}


def _parse_bool(raw: str, column: str, row: int) -> bool:
    try:
        return _BOOLS[raw.strip()]
    except KeyError:
        raise ParseError(f"column {column!r} must be 'true' or 'false', got {raw!r}", row=row)


def _parse_int(raw: str, column: str, row: int) -> int:
    try:
        return int(raw.strip())
    except ValueError:
        raise ParseError(f"column {column!r} must be an integer, got {raw!r}", row=row)


def _record_from_fields(fields: Mapping[str, str], row: int) -> AttemptRecord:
    try:
        return AttemptRecord(
            level_id=str(fields["level_id"]),
            player_id=str(fields["player_id"]),
            attempt_index=_parse_int(str(fields["attempt_index"]), "attempt_index", row),
            moves_used=_parse_int(str(fields["moves_used"]), "moves_used", row),
            success=_parse_bool(str(fields["success"]), "success", row),
            aborted=_parse_bool(str(fields["aborted"]), "aborted", row),
            used_booster=_parse_bool(str(fields["used_booster"]), "used_booster", row),
            used_extra_moves=_parse_bool(str(fields["used_extra_moves"]), "used_extra_moves", row),
        )
    except DataError as exc:
        raise ParseError(str(exc), row=row)


def _open_text(source) -> tuple[io.TextIOBase, bool]:
    """Return a text stream for a path, text stream or byte stream."""
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline=""), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(source.decode("utf-8")), True
    if isinstance(source, io.TextIOBase):
        return source, False
    return io.TextIOWrapper(source, encoding="utf-8", newline=""), False


def parse_attempts(source, format: str = "csv") -> Iterator[AttemptRecord]:
    """Stream AttemptRecords from CSV or JSON-lines telemetry.

    Rows come out in file order.  Malformed rows raise ParseError with the
    1-based line number; a header naming unknown or missing columns raises
    SchemaError.  The returned iterator owns `source` if it was a path.
    """
    fmt = format.replace("-", "").lower()
    if fmt not in ("csv", "jsonl", "jsonlines"):
        raise ParameterError(f"unknown telemetry format {format!r}")
    stream, owned = _open_text(source)

    def _rows():
        try:
            if fmt == "csv":
                reader = csv.reader(stream)
                try:
                    header = next(reader)
                except StopIteration:
                    raise SchemaError("empty input: missing CSV header")
                unknown = [c for c in header if c not in ATTEMPTS_CSV_COLUMNS]
                missing = [c for c in ATTEMPTS_CSV_COLUMNS if c not in header]
                if unknown:
                    raise SchemaError(f"unknown column(s): {', '.join(unknown)}")
                if missing:
                    raise SchemaError(f"missing column(s): {', '.join(missing)}")
                for line, values in enumerate(reader, start=2):
                    if not values:
                        continue
                    if len(values) != len(header):
                        raise ParseError(
                            f"expected {len(header)} fields, got {len(values)}", row=line
                        )
                    yield _record_from_fields(dict(zip(header, values)), row=line)
            else:
                for line, text in enumerate(stream, start=1):
                    if not text.strip():
                        continue
                    try:
                        obj = json.loads(text)
                    except json.JSONDecodeError as exc:
                        raise ParseError(f"invalid JSON: {exc}", row=line)
                    if not isinstance(obj, dict):
                        raise ParseError("each line must hold a JSON object", row=line)
                    unknown = [c for c in obj if c not in ATTEMPTS_CSV_COLUMNS]
                    missing = [c for c in ATTEMPTS_CSV_COLUMNS if c not in obj]
                    if unknown:
                        raise SchemaError(f"unknown field(s): {', '.join(unknown)}")
                    if missing:
                        raise SchemaError(f"missing field(s): {', '.join(missing)}")
                    fields = {
                        k: (("true" if v else "false") if isinstance(v, bool) else str(v))
                        for k, v in obj.items()
                    }
                    yield _record_from_fields(fields, row=line)
        finally:
            if owned:
                stream.close()

    return _rows()


def write_attempts_csv(records: Iterable[AttemptRecord], path) -> int:
    """Write records in the canonical CSV layout; returns the row count."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ATTEMPTS_CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.level_id,
                    r.player_id,
                    r.attempt_index,
                    r.moves_used,
                    str(r.success).lower(),
                    str(r.aborted).lower(),
                    str(r.used_booster).lower(),
                    str(r.used_extra_moves).lower(),
                ]
            )
            count += 1
    return count


def filter_attempts_with_stats(
    records: Iterable[AttemptRecord],
    config: IngestionConfig,
    move_limit: int,
) -> tuple[list[AttemptRecord], FilterStats]:
    """Apply the cleaning rules; returns retained records plus the drop ledger."""
    if config.booster_window_k > move_limit:
        raise ParameterError(
            f"booster_window_k={config.booster_window_k} exceeds move_limit={move_limit}"
        )
    kept: list[AttemptRecord] = []
    level_id: str | None = None
    aborted = booster = extra = index = in_window = 0
    for rec in records:
        if level_id is None:
            level_id = rec.level_id
        elif rec.level_id != level_id:
            raise MixedLevelError(
                f"expected records for level {level_id!r}, found {rec.level_id!r}"
            )
        if rec.aborted:
            aborted += 1
            continue
        if rec.used_booster:
            booster += 1
            if rec.moves_used >= move_limit - config.booster_window_k:
                in_window += 1
            continue
        if config.drop_extra_move_attempts and rec.used_extra_moves:
            extra += 1
            continue
        if (
            config.restrict_attempt_index is not None
            and rec.attempt_index != config.restrict_attempt_index
        ):
            index += 1
            continue
        kept.append(rec)
    stats = FilterStats(
        retained=len(kept),
        dropped_aborted=aborted,
        dropped_booster=booster,
        dropped_extra_moves=extra,
        dropped_attempt_index=index,
        booster_drops_in_window=in_window,
    )
    return kept, stats


def filter_attempts(
    records: Iterable[AttemptRecord],
    config: IngestionConfig,
    move_limit: int,
) -> list[AttemptRecord]:
    """Cleaning rules without the ledger; see filter_attempts_with_stats."""
    kept, _ = filter_attempts_with_stats(records, config, move_limit)
    return kept


def build_level_data(
    records: Iterable[AttemptRecord],
    move_limit: int,
    level_id: str | None = None,
) -> EmpiricalLevelData:
    """Bin pre-filtered records of one level into EmpiricalLevelData.

    Successes are binned by moves_used; failures contribute to the attempt
    total only (their moves_used always equals the limit by game rules).
    A success at m = 0 or m > move_limit violates the data contract.
    """
    histogram: Counter[int] = Counter()
    total = 0
    for rec in records:
        if level_id is None:
            level_id = rec.level_id
        elif rec.level_id != level_id:
            raise MixedLevelError(
                f"expected records for level {level_id!r}, found {rec.level_id!r}"
            )
        total += 1
        if rec.success:
            if rec.moves_used == 0 or rec.moves_used > move_limit:
                raise DataError(
                    f"success with moves_used={rec.moves_used} outside (0, {move_limit}] "
                    f"on level {level_id!r}"
                )
            histogram[rec.moves_used] += 1
    if total == 0:
        raise EmptyLevelError(f"level {level_id!r} has no retained attempts")
    return EmpiricalLevelData.from_counts(level_id, move_limit, histogram, total)


def group_by_level(records: Iterable[AttemptRecord]) -> dict[str, list[AttemptRecord]]:
    """Split a record stream by level_id, preserving order within each level."""
    groups: dict[str, list[AttemptRecord]] = {}
    for rec in records:
        groups.setdefault(rec.level_id, []).append(rec)
    return groups


def infer_move_limit(records: Iterable[AttemptRecord]) -> int:
    """Recover the move limit from telemetry of one level.

    Clean failures consume the whole budget, so their moves_used equals the
    limit.  Without any clean failure the maximum observed success is the
    best available lower bound and is returned instead.
    """
    fail_max = 0
    success_max = 0
    for rec in records:
        if rec.aborted or rec.used_extra_moves:
            continue
        if rec.success:
            success_max = max(success_max, rec.moves_used)
        else:
            fail_max = max(fail_max, rec.moves_used)
    limit = fail_max or success_max
    if limit < 1:
        raise DataError("cannot infer a move limit: no usable attempts")
    return limit


def load_histogram_json(source) -> list[EmpiricalLevelData]:
    """Load aggregated histogram JSON (one object, a list, or {"levels": [...]}).

    Each entry: {"level_id": ..., "move_limit": M, "counts": {"m": count},
    "total_attempts": N}.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    else:
        payload = json.load(source)
    if isinstance(payload, dict) and "levels" in payload:
        payload = payload["levels"]
    if isinstance(payload, dict):
        payload = [payload]
    if not isinstance(payload, list):
        raise SchemaError("histogram JSON must be an object or a list of objects")
    levels = []
    for i, entry in enumerate(payload):
        try:
            levels.append(
                EmpiricalLevelData.from_counts(
                    level_id=str(entry["level_id"]),
                    move_limit=int(entry["move_limit"]),
                    histogram={int(m): int(c) for m, c in entry["counts"].items()},
                    total_attempts=int(entry["total_attempts"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"histogram entry {i}: {exc}")
    return levels
