"""Consensus and evaluation for crowdsourced line-segment annotations."""

from .consensus import (
    Cluster,
    ConsensusAnnotation,
    ConsensusParams,
    Opinion,
    build_consensus,
    cluster_lines,
    dedup_within_cluster,
)
from .estimators import ConsensusAnnotator, CrowdConsensus, QscoreSelector, dice_h_score
from .geometry import LineSegment, Point2, point_segment_distance, segment_hausdorff
from .metric import Matching, SimilarityParams, dice_h, optimal_matching, pair_similarity
from .scoring import QscoreLedger, SelectionPolicy, qscore, record_training_score, select_top_k
from .validation import InvariantError, ValidationError

__version__ = "0.1.0"

__all__ = [
    "Cluster",
    "ConsensusAnnotation",
    "ConsensusAnnotator",
    "ConsensusParams",
    "CrowdConsensus",
    "InvariantError",
    "LineSegment",
    "Matching",
    "Opinion",
    "Point2",
    "QscoreLedger",
    "QscoreSelector",
    "SelectionPolicy",
    "SimilarityParams",
    "ValidationError",
    "build_consensus",
    "cluster_lines",
    "dedup_within_cluster",
    "dice_h",
    "dice_h_score",
    "optimal_matching",
    "pair_similarity",
    "point_segment_distance",
    "qscore",
    "record_training_score",
    "segment_hausdorff",
    "select_top_k",
]
