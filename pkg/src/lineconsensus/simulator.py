"""Synthetic contest: ground truth, expert panel and a learning crowd.

Everything here is an invented generative model standing in for private
clinical data. It is built so that the full pipeline can be exercised end
to end and its qualitative behaviour checked; its numbers say nothing about
real ultrasound annotation.

Randomness is fully determined by ``master_seed``. Each annotator draws
from its own stream keyed by (master_seed, annotator_id), so adding users
leaves existing users' behaviour untouched.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .consensus import ConsensusParams, Opinion, build_consensus_with
from .geometry import LineSegment
from .metric import IN_GAME_PARAMS, SimilarityParams, dice_h, segment_hausdorff
from .scoring import QscoreLedger
from .validation import ValidationError, check_count

SYNTHETIC_NOTE = (
    "Synthetic data: line counts, pleural band, noise family and learning curves "
    "come from an invented generative model, not from clinical recordings."
)

PLEURAL_BAND = (20.0, 40.0)
CENTER_RANGE = (5.0, 95.0)
TILT = 5.0
MIN_SEPARATION = 12.0
EMPTY_CASE_PROB = 0.25
LINE_COUNT_WEIGHTS = (0.35, 0.30, 0.20, 0.10, 0.05)  # for 1..5 lines
CONTEST_HOURS = 60
MEAN_GAP_MS = 20_000
MAX_OPINIONS_PER_USER = 1000


def stable_hash(text: str) -> int:
    return int.from_bytes(hashlib.sha256(str(text).encode()).digest()[:8], "little")


def stream(master_seed: int, key: str, extra: int = 0) -> np.random.Generator:
    """Independent generator for ``key`` under ``master_seed``."""
    return np.random.default_rng([int(master_seed) & (2**64 - 1), stable_hash(key), int(extra)])


@dataclass(frozen=True)
class TruthCase:
    case_id: str
    split: str
    true_lines: tuple[LineSegment, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "true_lines", tuple(self.true_lines))


@dataclass(frozen=True)
class AnnotatorModel:
    """Annotator whose skill approaches an asymptote with training experience.

    After ``n`` training cases the skill is ``initial + (asymptote - initial)
    * (1 - exp(-n / learning_rate))``, for both the detection probability
    and the endpoint noise sigma. Equal initial and asymptote values give a
    non-learning annotator.
    """

    detect_prob_initial: float = 0.9
    detect_prob_asymptote: float = 0.9
    noise_sigma_initial: float = 1.0
    noise_sigma_asymptote: float = 1.0
    learning_rate: float = 25.0
    false_positive_rate: float = 0.1
    response_seed: int = 0

    def __post_init__(self):
        for name in ("detect_prob_initial", "detect_prob_asymptote"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {p}")
        if self.noise_sigma_initial < 0 or self.noise_sigma_asymptote < 0:
            raise ValidationError("noise sigmas must be >= 0")
        if self.detect_prob_asymptote < self.detect_prob_initial:
            raise ValidationError("detect_prob_asymptote must be >= detect_prob_initial")
        if self.noise_sigma_asymptote > self.noise_sigma_initial:
            raise ValidationError("noise_sigma_asymptote must be <= noise_sigma_initial")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if self.false_positive_rate < 0:
            raise ValidationError("false_positive_rate must be >= 0")

    def skill(self, n_training_seen: int) -> tuple[float, float]:
        """``(detect_prob, noise_sigma)`` after ``n_training_seen`` training cases."""
        w = 1.0 - math.exp(-n_training_seen / self.learning_rate)
        detect = self.detect_prob_initial + (self.detect_prob_asymptote - self.detect_prob_initial) * w
        sigma = self.noise_sigma_initial + (self.noise_sigma_asymptote - self.noise_sigma_initial) * w
        return detect, sigma


EXPERT_MODEL = AnnotatorModel()


@dataclass(frozen=True)
class ContestConfig:
    n_train_cases: int = 200
    n_test_cases: int = 200
    train_test_ratio: tuple[int, int] = (1, 2)
    n_experts: int = 5
    n_crowd: int = 200
    opinions_per_crowd_user: float = 99.0
    master_seed: int = 2024

    def __post_init__(self):
        for name in ("n_train_cases", "n_test_cases", "n_experts", "n_crowd"):
            check_count(getattr(self, name), name)
        ratio = tuple(self.train_test_ratio)
        if len(ratio) != 2 or any(int(r) != r or r < 1 for r in ratio):
            raise ValidationError(f"train_test_ratio must be two integers >= 1, got {ratio}")
        object.__setattr__(self, "train_test_ratio", (int(ratio[0]), int(ratio[1])))
        if self.opinions_per_crowd_user < 1:
            raise ValidationError("opinions_per_crowd_user must be >= 1")

    @property
    def train_fraction(self) -> float:
        a, b = self.train_test_ratio
        return a / (a + b)


def _random_line(rng: np.random.Generator) -> LineSegment:
    cx = rng.uniform(*CENTER_RANGE)
    top_y = rng.uniform(*PLEURAL_BAND)
    top_x = np.clip(cx + rng.uniform(-TILT, TILT), 0.0, 100.0)
    bottom_x = np.clip(cx + rng.uniform(-TILT, TILT), 0.0, 100.0)
    return LineSegment.from_coords(top_x, top_y, bottom_x, 100.0)


def _case_lines(rng: np.random.Generator, n_lines: int, max_tries: int = 200):
    lines: list[LineSegment] = []
    for _ in range(n_lines):
        for _ in range(max_tries):
            cand = _random_line(rng)
            if all(segment_hausdorff(cand, other) >= MIN_SEPARATION for other in lines):
                lines.append(cand)
                break
        else:
            break
    return tuple(sorted(lines, key=lambda s: s.to_coords()))


def generate_truth(cfg: ContestConfig) -> list[TruthCase]:
    """Training then test cases with 0-5 well separated near-vertical lines.

    Training always contains at least one case with lines and one without.
    """
    rng = stream(cfg.master_seed, "truth")
    weights = np.asarray(LINE_COUNT_WEIGHTS) / sum(LINE_COUNT_WEIGHTS)
    cases = []
    for split, n in (("train", cfg.n_train_cases), ("test", cfg.n_test_cases)):
        for i in range(n):
            empty = rng.random() < EMPTY_CASE_PROB
            n_lines = 0 if empty else int(rng.choice(len(weights), p=weights)) + 1
            cases.append(TruthCase(f"{split}-{i:04d}", split, _case_lines(rng, n_lines)))
    train = [c for c in cases if c.split == "train"]
    if len(train) >= 2:
        if all(c.true_lines for c in train):
            cases[1] = TruthCase(train[1].case_id, "train", ())
        elif not any(c.true_lines for c in train):
            cases[0] = TruthCase(train[0].case_id, "train", _case_lines(rng, 1))
    return cases


def simulate_opinion(
    model: AnnotatorModel,
    case: TruthCase,
    n_training_seen: int,
    rng: np.random.Generator,
    annotator_id: str = "annotator",
    timestamp: int = 0,
) -> Opinion:
    """One noisy annotation of ``case`` at the model's current skill."""
    detect, sigma = model.skill(n_training_seen)
    lines = []
    for true in case.true_lines:
        if rng.random() >= detect:
            continue
        coords = np.asarray(true.to_coords())
        if sigma > 0:
            coords = np.clip(coords + rng.normal(0.0, sigma, 4), 0.0, 100.0)
        seg = LineSegment.from_coords(*coords)
        if not seg.is_degenerate:
            lines.append(seg)
    for _ in range(int(rng.poisson(model.false_positive_rate))):
        lines.append(_random_line(rng))
    return Opinion(case.case_id, annotator_id, tuple(lines), int(timestamp), case.split)


def schedule_draws(rng: np.random.Generator, n: int, cfg: ContestConfig, train_pos, train_neg, test):
    """Case ids for ``n`` successive opinions of one user.

    Each draw is a training case with probability ``cfg.train_fraction``;
    training draws pick the with-lines and without-lines pools equally
    often, test draws are uniform over test cases.
    """
    p_train = cfg.train_fraction
    out = []
    for _ in range(n):
        if rng.random() < p_train:
            pos = rng.random() < 0.5
            pool = (train_pos if pos else train_neg) or (train_neg if pos else train_pos)
        else:
            pool = test
        out.append(pool[int(rng.integers(len(pool)))])
    return out


def default_experts(cfg: ContestConfig) -> list[AnnotatorModel]:
    return [EXPERT_MODEL for _ in range(cfg.n_experts)]


def default_crowd(cfg: ContestConfig, expert_level_share: float = 0.3) -> list[AnnotatorModel]:
    """Heterogeneous learning crowd.

    A fixed share of users learn up to expert-level skill; the rest plateau
    at lower, randomly drawn skill. Everyone starts noticeably worse than
    their asymptote.
    """
    rng = stream(cfg.master_seed, "crowd-population")
    n_expert_level = int(round(expert_level_share * cfg.n_crowd))
    expert_level = set(rng.permutation(cfg.n_crowd)[:n_expert_level].tolist())
    crowd = []
    for i in range(cfg.n_crowd):
        if i in expert_level:
            detect = EXPERT_MODEL.detect_prob_asymptote
            sigma = EXPERT_MODEL.noise_sigma_asymptote
            fp = EXPERT_MODEL.false_positive_rate
        else:
            detect = rng.uniform(0.6, 0.9)
            sigma = rng.uniform(1.0, 3.5)
            fp = rng.uniform(0.05, 0.4)
        crowd.append(
            AnnotatorModel(
                detect_prob_initial=detect * rng.uniform(0.5, 0.8),
                detect_prob_asymptote=detect,
                noise_sigma_initial=sigma + rng.uniform(1.5, 4.0),
                noise_sigma_asymptote=sigma,
                learning_rate=rng.uniform(10.0, 40.0),
                false_positive_rate=fp,
            )
        )
    return crowd


@dataclass
class ContestResult:
    truth: list[TruthCase]
    expert_opinions: list[Opinion]
    crowd_opinions: list[Opinion]
    ledger: QscoreLedger
    references: dict[str, tuple[LineSegment, ...]] = field(default_factory=dict)


def expert_id(i: int) -> str:
    return f"expert-{i:02d}"


def crowd_id(i: int) -> str:
    return f"crowd-{i:04d}"


def run_contest(
    cfg: ContestConfig,
    experts: list[AnnotatorModel] | None = None,
    crowd: list[AnnotatorModel] | None = None,
    *,
    consensus_params: ConsensusParams | None = None,
    in_game_params: SimilarityParams = IN_GAME_PARAMS,
    window="all",
) -> ContestResult:
    """Simulate the contest and return the timestamp-ordered opinion streams.

    Experts annotate every case once without learning. Crowd users follow
    the training/test schedule; after each training opinion their in-game
    Dice-H against the all-expert consensus is recorded in the ledger and
    their experience counter advances.
    """
    experts = default_experts(cfg) if experts is None else list(experts)
    crowd = default_crowd(cfg) if crowd is None else list(crowd)
    truth = generate_truth(cfg)

    expert_ops = []
    for e, model in enumerate(experts):
        aid = expert_id(e)
        rng = stream(cfg.master_seed, aid, model.response_seed)
        for t, case in enumerate(truth):
            expert_ops.append(simulate_opinion(model, case, 0, rng, aid, t))
    by_case: dict[str, list[Opinion]] = {}
    for op in expert_ops:
        by_case.setdefault(op.case_id, []).append(op)
    references = {
        c.case_id: build_consensus_with(by_case[c.case_id], consensus_params).lines
        for c in truth
        if c.split == "train"
    }

    truth_by_id = {c.case_id: c for c in truth}
    train_pos = [c.case_id for c in truth if c.split == "train" and references[c.case_id]]
    train_neg = [c.case_id for c in truth if c.split == "train" and not references[c.case_id]]
    test_ids = [c.case_id for c in truth if c.split == "test"]

    ledger = QscoreLedger(window=window)
    crowd_ops = []
    horizon_ms = CONTEST_HOURS * 3600 * 1000
    for u, model in enumerate(crowd):
        aid = crowd_id(u)
        rng = stream(cfg.master_seed, aid, model.response_seed)
        n_ops = min(MAX_OPINIONS_PER_USER, int(rng.geometric(1.0 / cfg.opinions_per_crowd_user)))
        schedule = schedule_draws(rng, n_ops, cfg, train_pos, train_neg, test_ids)
        ts = int(rng.integers(horizon_ms))
        seen = 0
        for case_id in schedule:
            ts += 1 + int(rng.exponential(MEAN_GAP_MS))
            op = simulate_opinion(model, truth_by_id[case_id], seen, rng, aid, ts)
            crowd_ops.append(op)
            if op.split == "train":
                ledger.record(aid, ts, dice_h(op.lines, references[case_id], in_game_params))
                seen += 1
    crowd_ops.sort(key=lambda op: (op.timestamp, op.annotator_id))
    return ContestResult(truth, expert_ops, crowd_ops, ledger, references)
