"""scikit-learn style estimators over opinion streams.

The estimators take lists of :class:`~lineconsensus.consensus.Opinion` as
``X``; they support ``get_params``/``set_params``/``clone`` like any other
scikit-learn estimator so they can be grid-searched or swapped in
sensitivity studies.
"""

from __future__ import annotations

import math

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .consensus import ConsensusParams, build_consensus
from .evaluation import group_by_case
from .metric import SimilarityParams, dice_h
from .scoring import SelectionPolicy, build_ledger, rank_opinions
from .validation import ValidationError, check_opinions


def _as_line_sets(y):
    if y is None:
        raise ValidationError("reference line sets are required")
    return {case: tuple(getattr(ref, "lines", ref)) for case, ref in dict(y).items()}


class ConsensusAnnotator(BaseEstimator):
    """Per-case clustering consensus over every opinion in ``X``.

    Each annotator's most recent opinion per case is used.

    Attributes
    ----------
    consensus_ : dict
        case_id -> ConsensusAnnotation.
    """

    def __init__(self, merge_cutoff=10.0, majority_fraction=0.5, linkage="complete"):
        self.merge_cutoff = merge_cutoff
        self.majority_fraction = majority_fraction
        self.linkage = linkage

    def fit(self, X, y=None):
        from .scoring import most_recent_per_annotator

        params = ConsensusParams(self.merge_cutoff, self.majority_fraction, self.linkage)
        X = check_opinions(X)
        self.consensus_ = {
            case: build_consensus(
                most_recent_per_annotator(ops),
                params.merge_cutoff,
                params.majority_fraction,
                params.linkage,
            )
            for case, ops in sorted(group_by_case(X).items(), key=lambda kv: str(kv[0]))
        }
        return self

    def fit_predict(self, X, y=None):
        return list(self.fit(X).consensus_.values())


class QscoreSelector(BaseEstimator):
    """Learn annotator Qscores on training cases, keep the top-k test opinions.

    ``fit(X, y)`` takes training opinions and a mapping from case id to the
    reference line set (or ConsensusAnnotation) shown as feedback.
    ``transform`` returns the selected test opinions, case by case.
    """

    def __init__(self, k=5, window="all", min_training_opinions=10, in_game_cutoff=10.0):
        self.k = k
        self.window = window
        self.min_training_opinions = min_training_opinions
        self.in_game_cutoff = in_game_cutoff

    def _policy(self):
        return SelectionPolicy(
            k=self.k,
            min_training_opinions=self.min_training_opinions,
            qscore_cutoff_params=SimilarityParams(self.in_game_cutoff),
        )

    def fit(self, X, y=None):
        policy = self._policy()
        X = check_opinions(X, split="train")
        self.references_ = _as_line_sets(y)
        self.ledger_ = build_ledger(
            X, self.references_, policy.qscore_cutoff_params, window=self.window
        )
        self.n_training_opinions_ = len(self.ledger_)
        return self

    def select(self, X) -> dict:
        """case_id -> selected opinions (best first); cases with no eligible
        opinion are absent."""
        check_is_fitted(self, "ledger_")
        policy = self._policy()
        X = check_opinions(X, split="test")
        out = {}
        for case, ops in sorted(group_by_case(X).items(), key=lambda kv: str(kv[0])):
            ranked = rank_opinions(ops, self.ledger_, policy)[: policy.k]
            if ranked:
                out[case] = [op for _, op in ranked]
        return out

    def transform(self, X):
        return [op for ops in self.select(X).values() for op in ops]

    def fit_transform(self, X, y=None, X_test=None):
        self.fit(X, y)
        return self.transform(X if X_test is None else X_test)


class CrowdConsensus(BaseEstimator):
    """Top-k Qscore selection followed by clustering consensus."""

    def __init__(
        self,
        k=5,
        window="all",
        min_training_opinions=10,
        in_game_cutoff=10.0,
        merge_cutoff=10.0,
        majority_fraction=0.5,
        linkage="complete",
    ):
        self.k = k
        self.window = window
        self.min_training_opinions = min_training_opinions
        self.in_game_cutoff = in_game_cutoff
        self.merge_cutoff = merge_cutoff
        self.majority_fraction = majority_fraction
        self.linkage = linkage

    def fit(self, X, y=None):
        self.selector_ = QscoreSelector(
            k=self.k,
            window=self.window,
            min_training_opinions=self.min_training_opinions,
            in_game_cutoff=self.in_game_cutoff,
        ).fit(X, y)
        self.ledger_ = self.selector_.ledger_
        return self

    def select(self, X) -> dict:
        check_is_fitted(self, "selector_")
        return self.selector_.select(X)

    def predict(self, X) -> list:
        """One ConsensusAnnotation per test case with at least one eligible opinion."""
        annot = ConsensusAnnotator(self.merge_cutoff, self.majority_fraction, self.linkage)
        return [
            annot_case
            for ops in self.select(X).values()
            for annot_case in annot.fit_predict(ops)
        ]

    def score(self, X, y):
        """Mean Dice-H (cutoff 5) of predicted consensus against ``y``."""
        predicted = {c.case_id: c.lines for c in self.predict(X)}
        return dice_h_score(_as_line_sets(y), predicted)


def dice_h_score(y_true, y_pred, cutoff=5.0) -> float:
    """Mean Dice-H over cases.

    Accepts two aligned sequences of line sets, or two mappings keyed by
    case id (only shared keys are scored).
    """
    params = SimilarityParams(cutoff)
    if hasattr(y_true, "keys") and hasattr(y_pred, "keys"):
        keys = sorted(set(y_true) & set(y_pred), key=str)
        pairs = [(y_true[k], y_pred[k]) for k in keys]
    else:
        y_true, y_pred = list(y_true), list(y_pred)
        if len(y_true) != len(y_pred):
            raise ValidationError(
                f"y_true and y_pred differ in length: {len(y_true)} != {len(y_pred)}"
            )
        pairs = list(zip(y_true, y_pred))
    if not pairs:
        raise ValidationError("no cases to score")
    return math.fsum(dice_h(list(a), list(b), params) for a, b in pairs) / len(pairs)
