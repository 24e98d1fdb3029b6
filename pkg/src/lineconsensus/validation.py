"""Input validation helpers and the package's exception types."""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .consensus import Opinion

COORD_MIN = 0.0
COORD_MAX = 100.0
SPLITS = ("train", "test")


class ValidationError(ValueError):
    """Bad input data or parameters. The CLI maps this to exit code 1."""


class InvariantError(RuntimeError):
    """An internal invariant was violated. The CLI maps this to exit code 2."""


def check_coordinate(value, name="coordinate"):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(value) or not COORD_MIN <= value <= COORD_MAX:
        raise ValidationError(f"{name}={value} outside [{COORD_MIN:g}, {COORD_MAX:g}]")
    return value


def check_positive(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be > 0, got {value}")
    return value


def check_fraction(value, name, *, include_zero=False):
    value = float(value)
    low_ok = value >= 0 if include_zero else value > 0
    if not (low_ok and value <= 1):
        bracket = "[0, 1]" if include_zero else "(0, 1]"
        raise ValidationError(f"{name} must be in {bracket}, got {value}")
    return value


def check_count(value, name, *, minimum=1):
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise ValidationError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_split(value):
    if value not in SPLITS:
        raise ValidationError(f"split must be one of {SPLITS}, got {value!r}")
    return value


def check_segment(segment, name="line"):
    """Reject zero-length segments; the type allows them, ingestion does not."""
    if segment.is_degenerate:
        raise ValidationError(f"{name} is degenerate (zero length): {segment}")
    return segment


def check_single_case(opinions: Sequence[Opinion]):
    """Return the shared case_id of ``opinions`` or raise."""
    case_ids = {op.case_id for op in opinions}
    if len(case_ids) > 1:
        raise ValidationError(f"opinions span several cases: {sorted(map(str, case_ids))}")
    return next(iter(case_ids)) if case_ids else None


def check_unique_annotators(opinions: Iterable[Opinion]):
    seen = set()
    for op in opinions:
        if op.annotator_id in seen:
            raise ValidationError(
                f"annotator {op.annotator_id!r} has more than one opinion on case {op.case_id!r}"
            )
        seen.add(op.annotator_id)


def check_opinions(opinions, *, split=None, single_case=False, unique_annotators=False):
    """Validate a list of opinions and return it as a list.

    Every line must be non-degenerate and inside the unit square scaled to
    [0, 100]. Optionally require a given split, a single case and at most
    one opinion per annotator.
    """
    from .consensus import Opinion

    opinions = list(opinions)
    for op in opinions:
        if not isinstance(op, Opinion):
            raise ValidationError(f"expected Opinion, got {type(op).__name__}")
        if split is not None and op.split != split:
            raise ValidationError(
                f"opinion by {op.annotator_id!r} on case {op.case_id!r} has split "
                f"{op.split!r}, expected {split!r}"
            )
        for i, line in enumerate(op.lines):
            for label, pt in (("top", line.top), ("bottom", line.bottom)):
                check_coordinate(pt.x, f"line {i} {label}.x")
                check_coordinate(pt.y, f"line {i} {label}.y")
            check_segment(line, f"line {i} of {op.annotator_id!r} on {op.case_id!r}")
    if single_case:
        check_single_case(opinions)
    if unique_annotators:
        check_unique_annotators(opinions)
    return opinions
