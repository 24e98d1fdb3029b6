import itertools

import numpy as np
import pytest

from lineconsensus.consensus import ConsensusAnnotation
from lineconsensus.evaluation import concordance
from lineconsensus.geometry import segment_hausdorff
from lineconsensus.io import serialize_opinions
from lineconsensus.metric import dice_h
from lineconsensus.simulator import (
    MIN_SEPARATION,
    AnnotatorModel,
    ContestConfig,
    TruthCase,
    default_crowd,
    generate_truth,
    run_contest,
    schedule_draws,
    simulate_opinion,
    stream,
)
from lineconsensus.validation import ValidationError

SMALL = ContestConfig(n_train_cases=20, n_test_cases=20, n_crowd=4, opinions_per_crowd_user=20)


@pytest.fixture(scope="module")
def default_truth():
    return generate_truth(ContestConfig())


def test_truth_deterministic():
    assert generate_truth(SMALL) == generate_truth(SMALL)
    other = ContestConfig(n_train_cases=20, n_test_cases=20, master_seed=7)
    assert generate_truth(SMALL) != generate_truth(other)


def test_truth_bounds_and_orientation(default_truth):
    for case in default_truth:
        for s in case.true_lines:
            x1, y1, x2, y2 = s.to_coords()
            assert all(0.0 <= v <= 100.0 for v in (x1, y1, x2, y2))
            assert 20.0 <= y1 <= 40.0 and y2 == 100.0
            assert y1 <= y2
            assert abs(x1 - x2) <= 10.0


def test_truth_separation(default_truth):
    for case in default_truth:
        for a, b in itertools.combinations(case.true_lines, 2):
            assert segment_hausdorff(a, b) >= MIN_SEPARATION


def test_truth_counts_and_splits(default_truth):
    assert len(default_truth) == 400
    train = [c for c in default_truth if c.split == "train"]
    assert len(train) == 200
    assert any(c.true_lines for c in train) and any(not c.true_lines for c in train)
    assert all(len(c.true_lines) <= 5 for c in default_truth)


def test_tiny_training_split_has_both_kinds():
    for seed in range(20):
        cases = generate_truth(ContestConfig(n_train_cases=2, n_test_cases=1, master_seed=seed))
        train = [c for c in cases if c.split == "train"]
        assert any(c.true_lines for c in train) and any(not c.true_lines for c in train)


def test_zero_noise_opinion_equals_truth(default_truth):
    perfect = AnnotatorModel(1.0, 1.0, 0.0, 0.0, 25.0, 0.0)
    rng = np.random.default_rng(0)
    for case in default_truth[:50]:
        o = simulate_opinion(perfect, case, 0, rng)
        assert o.lines == case.true_lines
        assert dice_h(o.lines, case.true_lines) == 1.0


def test_blind_annotator_is_empty(default_truth):
    blind = AnnotatorModel(0.0, 0.0, 1.0, 1.0, 25.0, 0.0)
    rng = np.random.default_rng(0)
    assert all(simulate_opinion(blind, c, 0, rng).lines == () for c in default_truth[:50])


def test_model_invariants():
    with pytest.raises(ValidationError):
        AnnotatorModel(detect_prob_initial=0.9, detect_prob_asymptote=0.5)
    with pytest.raises(ValidationError):
        AnnotatorModel(noise_sigma_initial=1.0, noise_sigma_asymptote=2.0)
    with pytest.raises(ValidationError):
        ContestConfig(n_crowd=0)
    with pytest.raises(ValidationError):
        ContestConfig(train_test_ratio=(0, 2))


def test_skill_interpolation():
    m = AnnotatorModel(0.5, 0.9, 4.0, 1.0, 20.0, 0.1)
    assert m.skill(0) == (0.5, 4.0)
    d, s = m.skill(20)
    w = 1 - np.exp(-1)
    assert d == pytest.approx(0.5 + 0.4 * w) and s == pytest.approx(4.0 - 3.0 * w)


def test_learning_improves_mean_dice(default_truth):
    learner = AnnotatorModel(0.5, 0.95, 4.0, 0.8, 25.0, 0.2)
    cases = [c for c in default_truth if c.true_lines]
    means = []
    for n in (0, 50, 200):
        rng = stream(1, "monotone", n)
        scores = [
            dice_h(simulate_opinion(learner, cases[i % len(cases)], n, rng).lines,
                   cases[i % len(cases)].true_lines)
            for i in range(1000)
        ]
        means.append(np.mean(scores))
    assert means[0] <= means[1] <= means[2]


def test_schedule_train_fraction():
    cfg = ContestConfig()
    pos, neg, test = ["p1", "p2"], ["n1"], ["t1", "t2", "t3"]
    draws = schedule_draws(np.random.default_rng(3), 100_000, cfg, pos, neg, test)
    train = [d for d in draws if d[0] in "pn"]
    assert abs(len(train) / len(draws) - 1 / 3) <= 0.01
    assert abs(sum(d[0] == "p" for d in train) / len(train) - 0.5) <= 0.01


def test_contest_deterministic():
    a, b = run_contest(SMALL), run_contest(SMALL)
    assert serialize_opinions(a.crowd_opinions) == serialize_opinions(b.crowd_opinions)
    assert serialize_opinions(a.expert_opinions) == serialize_opinions(b.expert_opinions)


def test_stream_sorted_by_timestamp_then_annotator():
    ops = run_contest(SMALL).crowd_opinions
    keys = [(o.timestamp, o.annotator_id) for o in ops]
    assert keys == sorted(keys)


def test_adding_users_leaves_existing_users_untouched():
    crowd = default_crowd(ContestConfig(n_crowd=5))
    small = run_contest(SMALL, crowd=crowd[:3]).crowd_opinions
    big = run_contest(SMALL, crowd=crowd).crowd_opinions
    first = {"crowd-0000", "crowd-0001", "crowd-0002"}
    assert small == [o for o in big if o.annotator_id in first]


def test_single_user_ledger():
    cfg = ContestConfig(n_train_cases=20, n_test_cases=20, n_crowd=1, opinions_per_crowd_user=30)
    res = run_contest(cfg)
    train = [o for o in res.crowd_opinions if o.split == "train"]
    assert res.ledger.annotators == ["crowd-0000"]
    assert len(res.ledger) == len(train)
    assert [ts for ts, _ in res.ledger.entries("crowd-0000")] == [o.timestamp for o in train]


def test_experts_annotate_every_case_once():
    res = run_contest(SMALL)
    pairs = [(o.annotator_id, o.case_id) for o in res.expert_opinions]
    assert len(pairs) == len(set(pairs)) == SMALL.n_experts * 40


def test_population_share_of_expert_level_users():
    crowd = default_crowd(ContestConfig())
    expert_level = [m for m in crowd if m.noise_sigma_asymptote == 1.0 and m.detect_prob_asymptote == 0.9]
    assert len(expert_level) == 60
    assert all(m.noise_sigma_initial > m.noise_sigma_asymptote for m in crowd)


def test_expert_sanity_floor():
    # sharp, reliable experts agree closely with their leave-one-out references
    cfg = ContestConfig(n_crowd=1, opinions_per_crowd_user=1)
    sharp = AnnotatorModel(0.95, 0.95, 0.5, 0.5, 25.0, 0.1)
    res = run_contest(cfg, experts=[sharp] * 5, crowd=[AnnotatorModel()])
    tests = [c.case_id for c in res.truth if c.split == "test"]
    empty = {c: ConsensusAnnotation(c, (), 1) for c in tests}
    assert concordance(tests, res.expert_opinions, empty).expert_mean_dice >= 0.8


def test_truth_case_coerces_lines():
    assert isinstance(TruthCase("c", "train", []).true_lines, tuple)
