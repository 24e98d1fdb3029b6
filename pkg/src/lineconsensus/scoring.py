"""Annotator Qscores and top-k opinion selection.

An annotator's Qscore at time ``t`` is the mean of their in-game Dice-H
scores on training cases submitted strictly before ``t`` (optionally only
the most recent ``window`` of them).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

from .metric import IN_GAME_PARAMS, SimilarityParams, dice_h
from .validation import ValidationError, check_count


@dataclass
class QscoreLedger:
    """Per-annotator, time-ordered training scores.

    ``window`` is either a positive count or ``"all"``.
    """

    window: int | str = "all"
    _times: dict[str, list[int]] = field(default_factory=dict, repr=False)
    _scores: dict[str, list[float]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.window != "all":
            self.window = check_count(self.window, "window")

    def record(self, annotator_id, timestamp, score) -> QscoreLedger:
        score = float(score)
        if not 0.0 <= score <= 1.0:
            raise ValidationError(f"training score must be in [0, 1], got {score}")
        times = self._times.setdefault(annotator_id, [])
        if times and timestamp <= times[-1]:
            raise ValidationError(
                f"timestamp {timestamp} for {annotator_id!r} is not after the last "
                f"recorded entry ({times[-1]})"
            )
        times.append(timestamp)
        self._scores.setdefault(annotator_id, []).append(score)
        return self

    def entries(self, annotator_id) -> list[tuple[int, float]]:
        return list(zip(self._times.get(annotator_id, ()), self._scores.get(annotator_id, ())))

    @property
    def annotators(self) -> list[str]:
        return sorted(self._times)

    def n_before(self, annotator_id, at_time) -> int:
        return bisect.bisect_left(self._times.get(annotator_id, ()), at_time)

    def qscore(self, annotator_id, at_time, min_opinions=1) -> float | None:
        """Trailing mean score before ``at_time``; ``None`` when ineligible."""
        n = self.n_before(annotator_id, at_time)
        if n == 0 or n < min_opinions:
            return None
        start = 0 if self.window == "all" else max(0, n - self.window)
        recent = self._scores[annotator_id][start:n]
        return math.fsum(recent) / len(recent)

    def __len__(self):
        return sum(len(t) for t in self._times.values())


def record_training_score(ledger: QscoreLedger, annotator_id, timestamp, score) -> QscoreLedger:
    return ledger.record(annotator_id, timestamp, score)


def qscore(ledger: QscoreLedger, annotator_id, at_time, min_opinions=1):
    return ledger.qscore(annotator_id, at_time, min_opinions)


@dataclass(frozen=True)
class SelectionPolicy:
    k: int = 5
    min_training_opinions: int = 10
    qscore_cutoff_params: SimilarityParams = IN_GAME_PARAMS

    def __post_init__(self):
        check_count(self.k, "k")
        check_count(self.min_training_opinions, "min_training_opinions", minimum=0)


def most_recent_per_annotator(opinions):
    """Latest opinion of each annotator; later list position wins exact ties."""
    latest = {}
    for op in opinions:
        prev = latest.get(op.annotator_id)
        if prev is None or op.timestamp >= prev.timestamp:
            latest[op.annotator_id] = op
    return list(latest.values())


def rank_opinions(opinions, ledger: QscoreLedger, policy: SelectionPolicy):
    """``(qscore, opinion)`` for eligible latest opinions, best first.

    Qscore ties go to the later submission, then to the smaller annotator id.
    """
    scored = []
    for op in most_recent_per_annotator(opinions):
        q = ledger.qscore(op.annotator_id, op.timestamp, policy.min_training_opinions)
        if q is not None:
            scored.append((q, op))
    scored.sort(key=lambda t: (-t[0], -t[1].timestamp, str(t[1].annotator_id)))
    return scored


def select_top_k(opinions_on_case, ledger: QscoreLedger, policy: SelectionPolicy | None = None):
    """The ``policy.k`` highest-Qscore opinions on one test case."""
    policy = policy or SelectionPolicy()
    opinions_on_case = list(opinions_on_case)
    if len({op.case_id for op in opinions_on_case}) > 1:
        raise ValidationError("select_top_k expects opinions from a single case")
    for op in opinions_on_case:
        if op.split != "test":
            raise ValidationError(
                f"opinion by {op.annotator_id!r} on {op.case_id!r} is not a test opinion"
            )
    return [op for _, op in rank_opinions(opinions_on_case, ledger, policy)[: policy.k]]


def build_ledger(training_opinions, references, params=IN_GAME_PARAMS, window="all"):
    """Score training opinions against reference line sets into a new ledger.

    Opinions are replayed in (timestamp, annotator_id) order. Opinions on
    cases without a reference are ignored.
    """
    ledger = QscoreLedger(window=window)
    ordered = sorted(training_opinions, key=lambda op: (op.timestamp, str(op.annotator_id)))
    for op in ordered:
        ref = references.get(op.case_id)
        if ref is None:
            continue
        ledger.record(op.annotator_id, op.timestamp, dice_h(op.lines, ref, params))
    return ledger
