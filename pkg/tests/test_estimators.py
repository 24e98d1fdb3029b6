import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from lineconsensus.estimators import (
    ConsensusAnnotator,
    CrowdConsensus,
    QscoreSelector,
    dice_h_score,
)
from lineconsensus.validation import ValidationError

from conftest import op, vline

L, M = vline(30), vline(70)


def training_stream():
    # "good" matches the reference exactly, "bad" is always empty
    refs = {f"t{i}": (L,) for i in range(12)}
    ops = []
    for i in range(12):
        ops.append(op("good", [L], case=f"t{i}", ts=10 * i, split="train"))
        ops.append(op("bad", [], case=f"t{i}", ts=10 * i + 1, split="train"))
    return ops, refs


def test_get_params_and_clone():
    est = CrowdConsensus(k=3, window=20, linkage="average")
    params = est.get_params()
    assert params["k"] == 3 and params["window"] == 20 and params["linkage"] == "average"
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    est.set_params(k=7)
    assert est.k == 7


def test_consensus_annotator_uses_latest_opinion():
    ops = [
        op("a", [M], ts=1), op("a", [L], ts=2),
        op("b", [L], ts=1), op("c", [L], ts=1),
    ]
    (annot,) = ConsensusAnnotator().fit_predict(ops)
    assert annot.lines == (L,) and annot.contributing_annotators == 3


def test_consensus_annotator_rejects_non_opinions():
    with pytest.raises(ValidationError):
        ConsensusAnnotator().fit([("c1", [L])])


def test_selector_prefers_high_qscore():
    train, refs = training_stream()
    sel = QscoreSelector(k=1).fit(train, refs)
    test = [op("good", [L], ts=1000), op("bad", [], ts=1000)]
    assert [o.annotator_id for o in sel.transform(test)] == ["good"]


def test_selector_requires_fit():
    with pytest.raises(NotFittedError):
        QscoreSelector().select([op("u", [L])])


def test_selector_split_checks():
    train, refs = training_stream()
    with pytest.raises(ValidationError):
        QscoreSelector().fit([op("u", [L], split="test")], refs)
    sel = QscoreSelector().fit(train, refs)
    with pytest.raises(ValidationError):
        sel.select([op("u", [L], split="train")])


def test_selector_min_training_opinions():
    train, refs = training_stream()
    sel = QscoreSelector(min_training_opinions=13).fit(train, refs)
    assert sel.select([op("good", [L], ts=1000)]) == {}


def test_crowd_consensus_predict_and_score():
    train, refs = training_stream()
    model = CrowdConsensus(k=2, min_training_opinions=10).fit(train, refs)
    test = [op("good", [L], ts=1000), op("bad", [L], ts=1000)]
    (pred,) = model.predict(test)
    assert pred.lines == (L,)
    assert model.score(test, {"c1": (L,)}) == 1.0


def test_dice_h_score_sequences_and_mappings():
    assert dice_h_score([[L], []], [[L], []]) == 1.0
    assert dice_h_score({"a": [L], "b": [M]}, {"a": [L], "z": []}) == 1.0
    with pytest.raises(ValidationError):
        dice_h_score([[L]], [])
