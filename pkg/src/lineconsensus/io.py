"""JSONL opinion streams, CSV tables and JSON reports.

Every JSONL file the package reads or writes (opinions, consensus
annotations, simulated truth) uses one record shape::

    {"case_id": "test-0001", "annotator_id": "crowd-0042",
     "timestamp": 1718000000123, "split": "test",
     "lines": [[x1, y1, x2, y2], ...]}

Coordinates are reals in [0, 100]; timestamps are integer milliseconds.
Consensus records additionally carry ``contributing_annotators``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections.abc import Iterable

from .consensus import ConsensusAnnotation, Opinion
from .geometry import LineSegment
from .validation import ValidationError, check_coordinate, check_split

log = logging.getLogger(__name__)

REQUIRED_FIELDS = ("case_id", "annotator_id", "timestamp", "split", "lines")
OPTIONAL_FIELDS = ("contributing_annotators",)
CONSENSUS_ANNOTATOR = "consensus"


class ParseError(ValidationError):
    def __init__(self, lineno: int, field: str | None, message: str):
        self.lineno = lineno
        self.field = field
        where = f"line {lineno}" + (f", field {field!r}" if field else "")
        super().__init__(f"{where}: {message}")


def _parse_lines(value, lineno):
    if not isinstance(value, list):
        raise ParseError(lineno, "lines", "expected a list of [x1, y1, x2, y2]")
    out = []
    for i, coords in enumerate(value):
        if not isinstance(coords, list) or len(coords) != 4:
            raise ParseError(lineno, f"lines[{i}]", "expected [x1, y1, x2, y2]")
        vals = []
        for j, c in enumerate(coords):
            if isinstance(c, bool) or not isinstance(c, (int, float)):
                raise ParseError(lineno, f"lines[{i}][{j}]", f"expected a number, got {c!r}")
            try:
                vals.append(check_coordinate(c, "coordinate"))
            except ValidationError as exc:
                raise ParseError(lineno, f"lines[{i}][{j}]", str(exc)) from None
        seg = LineSegment.from_coords(*vals)
        if seg.is_degenerate:
            raise ParseError(lineno, f"lines[{i}]", "degenerate (zero-length) line")
        out.append(seg)
    return tuple(out)


def parse_record(record: dict, lineno: int = 1, strict: bool = False) -> Opinion:
    if not isinstance(record, dict):
        raise ParseError(lineno, None, "record must be a JSON object")
    for name in REQUIRED_FIELDS:
        if name not in record:
            raise ParseError(lineno, name, "missing required field")
    unknown = sorted(set(record) - set(REQUIRED_FIELDS) - set(OPTIONAL_FIELDS))
    if unknown:
        if strict:
            raise ParseError(lineno, unknown[0], "unknown field")
        log.warning("line %d: ignoring unknown fields %s", lineno, unknown)
    for name in ("case_id", "annotator_id"):
        if not isinstance(record[name], str) or not record[name]:
            raise ParseError(lineno, name, "expected a non-empty string")
    ts = record["timestamp"]
    if isinstance(ts, bool) or not isinstance(ts, int):
        raise ParseError(lineno, "timestamp", f"expected integer milliseconds, got {ts!r}")
    try:
        split = check_split(record["split"])
    except ValidationError as exc:
        raise ParseError(lineno, "split", str(exc)) from None
    return Opinion(
        case_id=record["case_id"],
        annotator_id=record["annotator_id"],
        lines=_parse_lines(record["lines"], lineno),
        timestamp=ts,
        split=split,
    )


def parse_opinions(source, strict: bool = False) -> list[Opinion]:
    """Parse JSONL text (a string or an iterable of lines) into opinions.

    Blank lines are skipped. Errors name the 1-based line number and field.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    out = []
    for lineno, raw in enumerate(source, start=1):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(lineno, None, f"invalid JSON ({exc.msg}, column {exc.colno})") from None
        out.append(parse_record(record, lineno, strict))
    return out


def read_opinions(path, strict: bool = False) -> list[Opinion]:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_opinions(fh, strict)
    except ParseError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None


def opinion_record(op: Opinion) -> dict:
    return {
        "case_id": op.case_id,
        "annotator_id": op.annotator_id,
        "timestamp": int(op.timestamp),
        "split": op.split,
        "lines": [s.to_coords() for s in op.lines],
    }


def consensus_record(c: ConsensusAnnotation, split: str = "test", timestamp: int = 0) -> dict:
    return {
        "case_id": c.case_id,
        "annotator_id": CONSENSUS_ANNOTATOR,
        "timestamp": int(timestamp),
        "split": split,
        "lines": [s.to_coords() for s in c.lines],
        "contributing_annotators": c.contributing_annotators,
    }


def dumps_jsonl(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, separators=(", ", ": ")) + "\n" for r in records)


def serialize_opinions(opinions: Iterable[Opinion]) -> str:
    return dumps_jsonl(opinion_record(op) for op in opinions)


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def dumps_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def dumps_report(report: dict) -> str:
    """Stable JSON text; non-finite floats become ``null`` / ``"inf"``."""
    return json.dumps(_json_safe(report), indent=2) + "\n"
