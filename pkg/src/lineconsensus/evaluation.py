"""Concordance of crowd consensus and individual experts with reference standards.

Each test case is evaluated once per expert ("fold"): the left-out expert's
own annotation and the crowd consensus are both compared with the
consensus of the remaining experts. Count references are the mean count of
those contributing experts.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from .consensus import ConsensusAnnotation, ConsensusParams, Opinion, build_consensus_with
from .metric import EVAL_PARAMS, SimilarityParams, dice_h
from .stats import (
    CorrelationResult,
    ZeroVarianceError,
    bca_bootstrap,
    bootstrap_replicates,
    paired_t,
    pearson,
    standard_error,
)
from .validation import ValidationError

REPORT_SCHEMA_VERSION = "1.0"


def group_by_case(opinions) -> dict[str, list[Opinion]]:
    if isinstance(opinions, Mapping):
        return {k: list(v) for k, v in opinions.items()}
    grouped: dict[str, list[Opinion]] = defaultdict(list)
    for op in opinions:
        grouped[op.case_id].append(op)
    return dict(grouped)


def _expert_order(expert_opinions):
    return sorted(expert_opinions, key=lambda op: str(op.annotator_id))


def loo_consensus(expert_opinions, leave_out: int, params: ConsensusParams | None = None):
    """Consensus of every expert except ``expert_opinions[leave_out]``."""
    experts = list(expert_opinions)
    if len(experts) < 3:
        raise ValidationError(f"leave-one-out consensus needs >= 3 experts, got {len(experts)}")
    if not 0 <= leave_out < len(experts):
        raise ValidationError(f"leave_out={leave_out} out of range for {len(experts)} experts")
    return build_consensus_with(experts[:leave_out] + experts[leave_out + 1 :], params)


def count_reference(expert_opinions) -> float:
    """Mean line count over the given experts."""
    counts = [len(op.lines) for op in expert_opinions]
    if not counts:
        raise ValidationError("count reference needs at least one expert opinion")
    return math.fsum(counts) / len(counts)


@dataclass(frozen=True)
class FoldEvaluation:
    left_out: str
    reference: ConsensusAnnotation
    reference_count: float
    expert_dice: float
    crowd_dice: float
    expert_sq_count_err: float
    crowd_sq_count_err: float


@dataclass(frozen=True)
class CaseEvaluation:
    case_id: str
    folds: tuple[FoldEvaluation, ...]
    crowd_count: int
    expert_counts: tuple[int, ...]

    @property
    def expert_dice(self) -> float:
        return math.fsum(f.expert_dice for f in self.folds) / len(self.folds)

    @property
    def crowd_dice(self) -> float:
        return math.fsum(f.crowd_dice for f in self.folds) / len(self.folds)

    @property
    def expert_count_mse(self) -> float:
        return math.fsum(f.expert_sq_count_err for f in self.folds) / len(self.folds)

    @property
    def crowd_count_mse(self) -> float:
        return math.fsum(f.crowd_sq_count_err for f in self.folds) / len(self.folds)


def _fold_mean(cases, attr):
    values = [getattr(f, attr) for c in cases for f in c.folds]
    return math.fsum(values) / len(values) if values else math.nan


@dataclass
class ConcordanceResult:
    cases: list[CaseEvaluation]
    skipped: dict[str, str] = field(default_factory=dict)

    @property
    def n_comparisons(self) -> int:
        return sum(len(c.folds) for c in self.cases)

    @property
    def crowd_mean_dice(self) -> float:
        return _fold_mean(self.cases, "crowd_dice")

    @property
    def expert_mean_dice(self) -> float:
        return _fold_mean(self.cases, "expert_dice")

    @property
    def crowd_count_mse(self) -> float:
        return _fold_mean(self.cases, "crowd_sq_count_err")

    @property
    def expert_count_mse(self) -> float:
        return _fold_mean(self.cases, "expert_sq_count_err")


def evaluate_case(
    expert_opinions,
    crowd: ConsensusAnnotation,
    metric_params: SimilarityParams = EVAL_PARAMS,
    consensus_params: ConsensusParams | None = None,
) -> CaseEvaluation:
    experts = _expert_order(expert_opinions)
    folds = []
    for i, left in enumerate(experts):
        others = experts[:i] + experts[i + 1 :]
        ref = loo_consensus(experts, i, consensus_params)
        ref_count = count_reference(others)
        folds.append(
            FoldEvaluation(
                left_out=left.annotator_id,
                reference=ref,
                reference_count=ref_count,
                expert_dice=dice_h(left.lines, ref.lines, metric_params),
                crowd_dice=dice_h(crowd.lines, ref.lines, metric_params),
                expert_sq_count_err=(len(left.lines) - ref_count) ** 2,
                crowd_sq_count_err=(len(crowd.lines) - ref_count) ** 2,
            )
        )
    return CaseEvaluation(
        case_id=crowd.case_id,
        folds=tuple(folds),
        crowd_count=len(crowd.lines),
        expert_counts=tuple(len(op.lines) for op in experts),
    )


def concordance(
    test_cases,
    expert_opinions,
    crowd_consensus_per_case: Mapping[str, ConsensusAnnotation],
    metric_params: SimilarityParams = EVAL_PARAMS,
    consensus_params: ConsensusParams | None = None,
) -> ConcordanceResult:
    """Per-case, per-fold concordance plus aggregate means.

    Cases lacking any expert in the panel (the union of experts seen across
    all cases) or lacking a crowd consensus are skipped and listed in
    ``skipped`` with the reason; they take no part in any aggregate.
    """
    experts_by_case = group_by_case(expert_opinions)
    panel = {op.annotator_id for ops in experts_by_case.values() for op in ops}
    result = ConcordanceResult(cases=[])
    for case_id in sorted(test_cases, key=str):
        ops = experts_by_case.get(case_id, [])
        present = {op.annotator_id for op in ops}
        if case_id not in crowd_consensus_per_case:
            result.skipped[case_id] = "no crowd consensus"
            continue
        if present != panel or len(ops) != len(panel):
            missing = sorted(map(str, panel - present))
            result.skipped[case_id] = f"missing expert opinions: {missing or 'duplicates'}"
            continue
        if len(ops) < 3:
            result.skipped[case_id] = f"only {len(ops)} experts"
            continue
        result.cases.append(
            evaluate_case(ops, crowd_consensus_per_case[case_id], metric_params, consensus_params)
        )
    return result


def count_match_rate(cases: Iterable[tuple[int, Iterable[int]]]) -> float | None:
    """Share of count-discordant cases where some expert matches the crowd.

    ``cases`` holds ``(crowd_count, expert_counts)`` pairs. A case is
    discordant when the crowd count differs from the mean expert count.
    Returns ``None`` when no case is discordant.
    """
    discordant = matched = 0
    for crowd_count, expert_counts in cases:
        expert_counts = list(expert_counts)
        reference = math.fsum(expert_counts) / len(expert_counts)
        if crowd_count == reference:
            continue
        discordant += 1
        matched += crowd_count in expert_counts
    return matched / discordant if discordant else None


def pairwise_agreement(opinions, params: SimilarityParams = EVAL_PARAMS) -> float:
    """Mean Dice-H over all unordered pairs of opinions."""
    scores = [dice_h(a.lines, b.lines, params) for a, b in itertools.combinations(opinions, 2)]
    if not scores:
        raise ValidationError("agreement needs at least two opinions")
    return math.fsum(scores) / len(scores)


def agreement_correlation(
    cases,
    expert_opinions,
    top_crowd_opinions,
    params: SimilarityParams = EVAL_PARAMS,
) -> CorrelationResult:
    """Pearson correlation of expert and crowd within-case agreement."""
    experts = group_by_case(expert_opinions)
    crowd = group_by_case(top_crowd_opinions)
    cases = sorted(cases, key=str)
    if len(cases) < 3:
        raise ValidationError(f"agreement correlation needs >= 3 cases, got {len(cases)}")
    xs = [pairwise_agreement(experts.get(c, []), params) for c in cases]
    ys = [pairwise_agreement(crowd.get(c, []), params) for c in cases]
    return pearson(xs, ys)


@dataclass(frozen=True)
class LearningCurveBin:
    bin_index: int
    first_index: int
    last_index: int
    mean: float
    sem: float
    n_scores: int
    n_annotators: int

    @property
    def low_support(self) -> bool:
        return self.n_annotators < 2


def learning_curve(records, bin_width: int = 25) -> list[LearningCurveBin]:
    """Mean score by experience.

    ``records`` holds ``(annotator_id, timestamp, score)`` for training
    opinions. Each annotator's opinions are indexed 1..n in time order and
    binned by index; scores are pooled across annotators within a bin.
    """
    if bin_width < 1:
        raise ValidationError(f"bin_width must be >= 1, got {bin_width}")
    per_annotator = defaultdict(list)
    for annotator, ts, score in records:
        per_annotator[annotator].append((ts, float(score)))
    bins: dict[int, list[tuple[str, float]]] = defaultdict(list)
    for annotator, items in per_annotator.items():
        items.sort(key=lambda t: t[0])
        for idx, (_, score) in enumerate(items, start=1):
            bins[(idx - 1) // bin_width].append((annotator, score))
    out = []
    for b in sorted(bins):
        scores = [s for _, s in bins[b]]
        out.append(
            LearningCurveBin(
                bin_index=b,
                first_index=b * bin_width + 1,
                last_index=(b + 1) * bin_width,
                mean=math.fsum(scores) / len(scores),
                sem=standard_error(scores),
                n_scores=len(scores),
                n_annotators=len({a for a, _ in bins[b]}),
            )
        )
    return out


@dataclass
class EvalReport:
    crowd_count_mse: float
    expert_count_mse: float
    crowd_mean_dice: float
    expert_mean_dice: float
    agreement_correlation: tuple[float, float] | None
    concordance_correlation: tuple[float, float] | None
    dice_diff_ci: tuple[float, float]
    dice_diff_mean: float
    count_mse_t: float
    count_mse_p: float
    count_match_rate: float | None
    learning_curve: list[LearningCurveBin]
    n_cases: int
    n_comparisons: int
    n_selected_opinions: int
    n_selected_annotators: int
    skipped_cases: dict[str, str] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def corr(c):
            return None if c is None else {"r": c[0], "p": c[1]}

        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "counts": {
                "crowd_mse": self.crowd_count_mse,
                "expert_mse": self.expert_count_mse,
                "paired_t": self.count_mse_t,
                "paired_t_p": self.count_mse_p,
                "match_rate": self.count_match_rate,
            },
            "dice_h": {
                "crowd_mean": self.crowd_mean_dice,
                "expert_mean": self.expert_mean_dice,
                "diff_mean": self.dice_diff_mean,
                "diff_bca_ci": list(self.dice_diff_ci),
            },
            "correlations": {
                "agreement": corr(self.agreement_correlation),
                "concordance": corr(self.concordance_correlation),
            },
            "learning_curve": [
                {
                    "bin": b.bin_index,
                    "first_index": b.first_index,
                    "last_index": b.last_index,
                    "mean": b.mean,
                    "sem": b.sem,
                    "n_scores": b.n_scores,
                    "n_annotators": b.n_annotators,
                    "low_support": b.low_support,
                }
                for b in self.learning_curve
            ],
            "sizes": {
                "cases": self.n_cases,
                "comparisons": self.n_comparisons,
                "selected_opinions": self.n_selected_opinions,
                "selected_annotators": self.n_selected_annotators,
            },
            "skipped_cases": dict(sorted(self.skipped_cases.items())),
            "notes": list(self.notes),
        }


@dataclass
class EvaluationOutput:
    report: EvalReport
    concordance: ConcordanceResult
    bootstrap_replicates: np.ndarray
    crowd_consensus: dict[str, ConsensusAnnotation]
    selected: dict[str, list[Opinion]]


def _safe_pearson(xs, ys, notes, label):
    try:
        return tuple(pearson(xs, ys))
    except ZeroVarianceError:
        notes.append(f"{label} correlation undefined: zero variance")
    except ValidationError as exc:
        notes.append(f"{label} correlation undefined: {exc}")
    return None


def evaluate_protocol(expert_opinions, crowd_opinions, config=None) -> EvaluationOutput:
    """Run the whole evaluation from raw expert and crowd opinion streams.

    Training-case references are all-expert consensuses; crowd training
    opinions scored against them (in-game cutoff) build the Qscore ledger.
    Each test case's crowd consensus uses the top-k Qscore opinions.
    """
    from .config import RunConfig
    from .estimators import CrowdConsensus

    config = config or RunConfig()
    metric_params = SimilarityParams(config.eval_cutoff)
    consensus_params = config.consensus
    expert_opinions = list(expert_opinions)
    crowd_opinions = list(crowd_opinions)

    experts_by_case = group_by_case(expert_opinions)
    train_cases = sorted({op.case_id for op in expert_opinions if op.split == "train"}, key=str)
    test_cases = sorted({op.case_id for op in expert_opinions if op.split == "test"}, key=str)
    references = {
        c: build_consensus_with(experts_by_case[c], consensus_params).lines for c in train_cases
    }

    model = CrowdConsensus(
        k=config.selection.k,
        window=config.selection.window,
        min_training_opinions=config.selection.min_training_opinions,
        in_game_cutoff=config.in_game_cutoff,
        merge_cutoff=consensus_params.merge_cutoff,
        majority_fraction=consensus_params.majority_fraction,
        linkage=consensus_params.linkage,
    )
    train_ops = [op for op in crowd_opinions if op.split == "train"]
    test_ops = [op for op in crowd_opinions if op.split == "test"]
    model.fit(train_ops, references)
    selected = model.select(test_ops)
    crowd_consensus = {c: build_consensus_with(ops, consensus_params) for c, ops in selected.items()}

    conc = concordance(test_cases, experts_by_case, crowd_consensus, metric_params, consensus_params)
    notes = [
        "Dice-H concordance uses cutoff %g; Qscores use cutoff %g"
        % (metric_params.cutoff, config.in_game_cutoff)
    ]
    cases = conc.cases
    if not cases:
        raise ValidationError("no test case could be evaluated: " + "; ".join(
            f"{k}: {v}" for k, v in sorted(conc.skipped.items())
        ))

    crowd_mse = [c.crowd_count_mse for c in cases]
    expert_mse = [c.expert_count_mse for c in cases]
    if len(cases) >= 2:
        t_stat, t_p = paired_t(crowd_mse, expert_mse)
    else:
        t_stat, t_p = math.nan, math.nan
        notes.append("paired t-test undefined: fewer than 2 cases")

    diffs = np.array([c.crowd_dice - c.expert_dice for c in cases])
    reps = bootstrap_replicates(diffs, np.mean, config.bootstrap, vectorized=True)
    ci = bca_bootstrap(diffs, np.mean, config.bootstrap, vectorized=True, replicates=reps)

    concordance_r = _safe_pearson(
        [c.crowd_dice for c in cases], [c.expert_dice for c in cases], notes, "concordance"
    )
    evaluated = [c.case_id for c in cases]
    agreement_cases = [c for c in evaluated if len(selected.get(c, [])) >= 2]
    if len(agreement_cases) < len(evaluated):
        notes.append(
            f"agreement correlation excludes {len(evaluated) - len(agreement_cases)} "
            "cases with fewer than 2 selected crowd opinions"
        )
    try:
        agreement_r = tuple(
            agreement_correlation(agreement_cases, experts_by_case, selected, metric_params)
        )
    except ValidationError as exc:
        agreement_r = None
        notes.append(f"agreement correlation undefined: {exc}")

    match_rate = count_match_rate((c.crowd_count, c.expert_counts) for c in cases)
    if match_rate is None:
        notes.append("count match rate undefined: crowd count matched every reference")

    lc_records = [
        (op.annotator_id, op.timestamp, dice_h(op.lines, references[op.case_id], metric_params))
        for op in train_ops
        if op.case_id in references
    ]
    curve = learning_curve(lc_records, config.learning_curve_bin_width)

    used = [op for c in evaluated for op in selected.get(c, [])]
    report = EvalReport(
        crowd_count_mse=conc.crowd_count_mse,
        expert_count_mse=conc.expert_count_mse,
        crowd_mean_dice=conc.crowd_mean_dice,
        expert_mean_dice=conc.expert_mean_dice,
        agreement_correlation=agreement_r,
        concordance_correlation=concordance_r,
        dice_diff_ci=(ci.low, ci.high),
        dice_diff_mean=float(math.fsum(diffs) / diffs.size),
        count_mse_t=t_stat,
        count_mse_p=t_p,
        count_match_rate=match_rate,
        learning_curve=curve,
        n_cases=len(cases),
        n_comparisons=conc.n_comparisons,
        n_selected_opinions=len(used),
        n_selected_annotators=len({op.annotator_id for op in used}),
        skipped_cases=conc.skipped,
        notes=notes,
    )
    return EvaluationOutput(report, conc, reps, crowd_consensus, selected)


def check_report_invariants(output: EvaluationOutput, n_experts: int | None = None) -> None:
    """Raise InvariantError if the evaluation output is internally inconsistent."""
    from .validation import InvariantError

    report = output.report
    problems = []
    for case in output.concordance.cases:
        for f in case.folds:
            if not (0.0 <= f.expert_dice <= 1.0 and 0.0 <= f.crowd_dice <= 1.0):
                problems.append(f"{case.case_id}: Dice-H outside [0, 1]")
            if f.expert_sq_count_err < 0 or f.crowd_sq_count_err < 0:
                problems.append(f"{case.case_id}: negative squared error")
        if n_experts is not None and len(case.folds) != n_experts:
            problems.append(f"{case.case_id}: {len(case.folds)} folds for {n_experts} experts")
    low, high = report.dice_diff_ci
    if not low <= high:
        problems.append(f"CI endpoints out of order: {low} > {high}")
    idx = [b.bin_index for b in report.learning_curve]
    if idx != sorted(idx):
        problems.append("learning curve bins out of order")
    if report.n_comparisons != sum(len(c.folds) for c in output.concordance.cases):
        problems.append("comparison count mismatch")
    if problems:
        raise InvariantError("; ".join(problems))
