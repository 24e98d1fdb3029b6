"""Consensus line sets from several annotators' opinions on one case.

Lines from all annotators are pooled and merged by agglomerative
clustering on segment Hausdorff distance. Within each cluster an annotator
keeps only their line closest to the cluster centroid. Clusters backed by
no more than ``majority_fraction`` of the annotators are dropped, and each
survivor becomes one consensus line by averaging endpoints.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .geometry import LineSegment, Point2, segment_hausdorff
from .validation import (
    ValidationError,
    check_fraction,
    check_positive,
    check_single_case,
    check_split,
    check_unique_annotators,
)

LINKAGES = ("complete", "single", "average")


@dataclass(frozen=True)
class Opinion:
    """One annotator's full line set for one case at one time (ms)."""

    case_id: str
    annotator_id: str
    lines: tuple[LineSegment, ...] = ()
    timestamp: int = 0
    split: str = "test"

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))
        check_split(self.split)

    @property
    def count(self) -> int:
        return len(self.lines)


@dataclass(frozen=True)
class Cluster:
    members: tuple[tuple[str, LineSegment], ...]
    centroid: LineSegment = field(init=False)

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValidationError("a cluster needs at least one member")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "centroid", mean_segment([s for _, s in members]))

    @property
    def annotators(self) -> set[str]:
        return {a for a, _ in self.members}

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class ConsensusAnnotation:
    case_id: str
    lines: tuple[LineSegment, ...]
    contributing_annotators: int

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))

    @property
    def count(self) -> int:
        return len(self.lines)


@dataclass(frozen=True)
class ConsensusParams:
    merge_cutoff: float = 10.0
    majority_fraction: float = 0.5
    linkage: str = "complete"

    def __post_init__(self):
        check_positive(self.merge_cutoff, "merge_cutoff")
        check_fraction(self.majority_fraction, "majority_fraction")
        if self.linkage not in LINKAGES:
            raise ValidationError(f"linkage must be one of {LINKAGES}, got {self.linkage!r}")


def mean_segment(segments: Sequence[LineSegment]) -> LineSegment:
    """Segment whose endpoints are the means of the canonical endpoints."""
    coords = [s.to_coords() for s in segments]
    ref = coords[0]
    n = len(coords)
    # offsets from the first member keep identical inputs exact
    mean = [r + math.fsum(c[k] - r for c in coords) / n for k, r in enumerate(ref)]
    return LineSegment(Point2(mean[0], mean[1]), Point2(mean[2], mean[3]))


def pooled_members(opinions: Sequence[Opinion]) -> list[tuple[str, LineSegment]]:
    """All lines as ``(annotator_id, line)`` in (annotator_id, line index) order."""
    ordered = sorted(opinions, key=lambda op: str(op.annotator_id))
    return [(op.annotator_id, line) for op in ordered for line in op.lines]


def _agglomerate(dist: np.ndarray, cutoff: float, linkage: str) -> list[list[int]]:
    """Greedy agglomeration; returns clusters as sorted index lists.

    At each step the pair of clusters with the smallest linkage distance is
    merged (ties resolved by lowest cluster positions) while that distance
    is <= ``cutoff``. Linkage distances are maintained with the
    Lance-Williams updates.
    """
    n = dist.shape[0]
    clusters: list[list[int]] = [[i] for i in range(n)]
    d = dist.astype(float).copy()
    np.fill_diagonal(d, np.inf)
    active = list(range(n))
    while len(active) > 1:
        sub = d[np.ix_(active, active)]
        flat = int(np.argmin(sub))
        p, q = divmod(flat, len(active))
        if sub[p, q] > cutoff:
            break
        i, j = active[p], active[q]
        if i > j:
            i, j = j, i
        ni, nj = len(clusters[i]), len(clusters[j])
        if linkage == "complete":
            merged = np.maximum(d[i], d[j])
        elif linkage == "single":
            merged = np.minimum(d[i], d[j])
        else:
            merged = (ni * d[i] + nj * d[j]) / (ni + nj)
        d[i, :] = merged
        d[:, i] = merged
        d[i, i] = np.inf
        d[j, :] = np.inf
        d[:, j] = np.inf
        clusters[i] = sorted(clusters[i] + clusters[j])
        clusters[j] = []
        active.remove(j)
    return [clusters[i] for i in active]


def distance_matrix(segments: Sequence[LineSegment]) -> np.ndarray:
    n = len(segments)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = segment_hausdorff(segments[i], segments[j])
    return dist


def cluster_lines(opinions, merge_cutoff=10.0, linkage="complete") -> list[Cluster]:
    """Partition all pooled lines of one case into clusters.

    Clusters come back ordered by their first member in pooled order.
    """
    opinions = list(opinions)
    check_single_case(opinions)
    check_unique_annotators(opinions)
    merge_cutoff = check_positive(merge_cutoff, "merge_cutoff")
    if linkage not in LINKAGES:
        raise ValidationError(f"linkage must be one of {LINKAGES}, got {linkage!r}")
    members = pooled_members(opinions)
    if not members:
        return []
    dist = distance_matrix([s for _, s in members])
    groups = _agglomerate(dist, merge_cutoff, linkage)
    groups.sort(key=lambda g: g[0])
    return [Cluster(tuple(members[k] for k in g)) for g in groups]


def dedup_within_cluster(c: Cluster) -> Cluster:
    """Keep one line per annotator: the one nearest the pre-dedup centroid.

    Ties go to the member listed first. The returned cluster's centroid is
    recomputed from the surviving members.
    """
    best: dict[str, tuple[float, int]] = {}
    for pos, (annotator, seg) in enumerate(c.members):
        d = segment_hausdorff(seg, c.centroid)
        if annotator not in best or d < best[annotator][0]:
            best[annotator] = (d, pos)
    keep = sorted(pos for _, pos in best.values())
    if len(keep) == len(c.members):
        return c
    return Cluster(tuple(c.members[p] for p in keep))


def _line_key(s: LineSegment):
    return (s.top.x, s.top.y, s.bottom.x, s.bottom.y)


def build_consensus(
    opinions,
    merge_cutoff=10.0,
    majority_fraction=0.5,
    linkage="complete",
) -> ConsensusAnnotation:
    """Consensus annotation for one case.

    ``N`` is the number of opinions, counting annotators who drew no lines.
    A cluster survives only if more than ``majority_fraction * N`` distinct
    annotators remain in it after deduplication.
    """
    opinions = list(opinions)
    if not opinions:
        raise ValidationError("cannot build a consensus from zero opinions")
    majority_fraction = check_fraction(majority_fraction, "majority_fraction")
    case_id = check_single_case(opinions)
    n = len(opinions)
    clusters = [dedup_within_cluster(c) for c in cluster_lines(opinions, merge_cutoff, linkage)]
    threshold = majority_fraction * n
    lines = [mean_segment([s for _, s in c.members]) for c in clusters if len(c) > threshold]
    lines.sort(key=_line_key)
    return ConsensusAnnotation(case_id=case_id, lines=tuple(lines), contributing_annotators=n)


def build_consensus_with(opinions, params: ConsensusParams | None = None) -> ConsensusAnnotation:
    params = params or ConsensusParams()
    return build_consensus(opinions, params.merge_cutoff, params.majority_fraction, params.linkage)
