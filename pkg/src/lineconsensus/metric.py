"""Line-set similarity: pair scores, optimal matching and the Dice-H score."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .assignment import linear_assignment
from .geometry import LineSegment, segment_hausdorff
from .validation import check_positive

EVAL_CUTOFF = 5.0
IN_GAME_CUTOFF = 10.0


@dataclass(frozen=True)
class SimilarityParams:
    """Hausdorff distance at which pair similarity has decayed to zero.

    Concordance evaluation uses 5; in-game feedback (and hence Qscores)
    uses the more lenient 10.
    """

    cutoff: float = EVAL_CUTOFF

    def __post_init__(self):
        object.__setattr__(self, "cutoff", check_positive(self.cutoff, "cutoff"))


EVAL_PARAMS = SimilarityParams(EVAL_CUTOFF)
IN_GAME_PARAMS = SimilarityParams(IN_GAME_CUTOFF)


@dataclass(frozen=True)
class Matching:
    pairs: list[tuple[int, int, float]] = field(default_factory=list)
    unmatched_a: list[int] = field(default_factory=list)
    unmatched_b: list[int] = field(default_factory=list)

    @property
    def total_similarity(self) -> float:
        return math.fsum(s for _, _, s in self.pairs)


def _params(params) -> SimilarityParams:
    if params is None:
        return EVAL_PARAMS
    if isinstance(params, SimilarityParams):
        return params
    return SimilarityParams(params)


def pair_similarity(a: LineSegment, b: LineSegment, params=None) -> float:
    """``max(0, 1 - hausdorff / cutoff)``; ``params`` may be a bare cutoff."""
    cutoff = _params(params).cutoff
    return max(0.0, 1.0 - segment_hausdorff(a, b) / cutoff)


def similarity_matrix(set_a: Sequence[LineSegment], set_b: Sequence[LineSegment], params=None):
    cutoff = _params(params).cutoff
    sim = np.empty((len(set_a), len(set_b)))
    for i, a in enumerate(set_a):
        for j, b in enumerate(set_b):
            sim[i, j] = max(0.0, 1.0 - segment_hausdorff(a, b) / cutoff)
    return sim


def optimal_matching(set_a, set_b, params=None) -> Matching:
    """Maximum total-similarity matching of size ``min(|A|, |B|)``.

    Solved as a linear assignment with cost ``1 - similarity``. Pairs whose
    similarity is 0 are kept; lines left over from the larger set are
    reported as unmatched.
    """
    sim = similarity_matrix(set_a, set_b, params)
    rows, cols = linear_assignment(1.0 - sim) if sim.size else ([], [])
    pairs = [(int(i), int(j), float(sim[i, j])) for i, j in zip(rows, cols)]
    matched_a = {i for i, _, _ in pairs}
    matched_b = {j for _, j, _ in pairs}
    return Matching(
        pairs=pairs,
        unmatched_a=[i for i in range(len(set_a)) if i not in matched_a],
        unmatched_b=[j for j in range(len(set_b)) if j not in matched_b],
    )


def dice_h(set_a, set_b, params=None) -> float:
    """Dice-H score between two line sets.

    Twice the optimal matched similarity divided by the total number of
    lines. Two empty sets agree perfectly and score 1.0.
    """
    n = len(set_a) + len(set_b)
    if n == 0:
        return 1.0
    if not set_a or not set_b:
        return 0.0
    total = optimal_matching(set_a, set_b, params).total_similarity
    return min(1.0, max(0.0, 2.0 * total / n))
