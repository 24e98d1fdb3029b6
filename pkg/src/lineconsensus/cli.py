"""Command-line interface.

Subcommands: ``diceh``, ``consensus``, ``evaluate``, ``simulate``,
``qscore``. Exit status is 0 on success, 1 for invalid input and 2 for an
internal invariant violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .config import SEED_ENV, RunConfig, dumps_config, load_config
from .estimators import ConsensusAnnotator
from .evaluation import check_report_invariants, evaluate_protocol, group_by_case
from .io import (
    consensus_record,
    dumps_csv,
    dumps_jsonl,
    dumps_report,
    read_opinions,
    serialize_opinions,
    write_text,
)
from .metric import SimilarityParams, dice_h
from .plots import histogram_svg, learning_curve_svg
from .scoring import build_ledger, most_recent_per_annotator
from .simulator import SYNTHETIC_NOTE, run_contest
from .validation import InvariantError, ValidationError

log = logging.getLogger("lineconsensus")


def _latest_by_annotator(opinions):
    return {
        case: {op.annotator_id: op for op in most_recent_per_annotator(ops)}
        for case, ops in group_by_case(opinions).items()
    }


def cmd_diceh(args) -> int:
    """Per-case Dice-H between two files.

    When each file holds a single annotator for a case the two opinions are
    compared directly; otherwise opinions are paired by annotator id.
    """
    params = SimilarityParams(args.cutoff)
    a = _latest_by_annotator(read_opinions(args.file_a, args.strict))
    b = _latest_by_annotator(read_opinions(args.file_b, args.strict))
    rows = []
    for case in sorted(set(a) | set(b), key=str):
        if case not in a or case not in b:
            log.warning("case %s present in only one file; skipped", case)
            continue
        ca, cb = a[case], b[case]
        if len(ca) == 1 and len(cb) == 1:
            pairs = [(next(iter(ca.values())), next(iter(cb.values())))]
        else:
            shared = sorted(set(ca) & set(cb), key=str)
            if not shared:
                log.warning("case %s: no annotator appears in both files; skipped", case)
            pairs = [(ca[k], cb[k]) for k in shared]
        for x, y in pairs:
            rows.append(
                [case, x.annotator_id, y.annotator_id, len(x.lines), len(y.lines),
                 repr(dice_h(x.lines, y.lines, params))]
            )
    sys.stdout.write(
        dumps_csv(["case_id", "annotator_a", "annotator_b", "n_a", "n_b", "dice_h"], rows)
    )
    return 0


def _config(args) -> RunConfig:
    return load_config(getattr(args, "config", None))


def cmd_consensus(args) -> int:
    cfg = _config(args)
    params = cfg.consensus
    opinions = read_opinions(args.opinions, args.strict)
    est = ConsensusAnnotator(
        merge_cutoff=args.merge_cutoff if args.merge_cutoff is not None else params.merge_cutoff,
        majority_fraction=(
            args.majority_fraction if args.majority_fraction is not None
            else params.majority_fraction
        ),
        linkage=args.linkage or params.linkage,
    )
    est.fit(opinions)
    splits = {op.case_id: op.split for op in opinions}
    text = dumps_jsonl(consensus_record(c, splits[c.case_id]) for c in est.consensus_.values())
    if args.out:
        write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    experts = read_opinions(args.experts, args.strict)
    crowd = read_opinions(args.crowd, args.strict)
    output = evaluate_protocol(experts, crowd, cfg)
    n_experts = len({op.annotator_id for op in experts})
    check_report_invariants(output, n_experts)

    report = output.report.to_dict()
    report["config"] = cfg.to_dict()
    report["seeds"] = {
        "bootstrap": cfg.bootstrap.seed,
        "simulator": cfg.simulator.master_seed,
    }
    # inputs written by `simulate` carry a manifest; flag the report as synthetic
    manifest = Path(args.crowd).parent / "manifest.json"
    if manifest.exists():
        try:
            report["data_note"] = json.loads(manifest.read_text(encoding="utf-8"))["note"]
        except (ValueError, KeyError, TypeError):
            log.warning("%s: unreadable manifest; no data note added", manifest)
    out = Path(args.out)
    out_dir = out.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    write_text(out, dumps_report(report))

    curve = output.report.learning_curve
    write_text(
        out_dir / "learning_curve.csv",
        dumps_csv(
            ["bin", "first_index", "last_index", "mean", "sem", "n_scores", "n_annotators",
             "low_support"],
            [[b.bin_index, b.first_index, b.last_index, repr(b.mean), repr(b.sem), b.n_scores,
              b.n_annotators, int(b.low_support)] for b in curve],
        ),
    )
    write_text(
        out_dir / "figure3b_bootstrap.csv",
        dumps_csv(["replicate", "dice_diff"],
                  [[i, repr(float(v))] for i, v in enumerate(output.bootstrap_replicates)]),
    )
    if args.svg:
        r = output.report
        write_text(out_dir / "learning_curve.svg",
                   learning_curve_svg(curve, r.expert_mean_dice, r.crowd_mean_dice))
        write_text(out_dir / "figure3b_bootstrap.svg",
                   histogram_svg(output.bootstrap_replicates, r.dice_diff_ci))
    return 0


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if args.seed is not None:
        cfg = dataclasses.replace(
            cfg, simulator=dataclasses.replace(cfg.simulator, master_seed=args.seed)
        )
    result = run_contest(
        cfg.simulator,
        consensus_params=cfg.consensus,
        in_game_params=SimilarityParams(cfg.in_game_cutoff),
        window=cfg.selection.window,
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    truth_records = (
        {"case_id": c.case_id, "annotator_id": "truth", "timestamp": 0, "split": c.split,
         "lines": [s.to_coords() for s in c.true_lines]}
        for c in result.truth
    )
    write_text(out / "truth.jsonl", dumps_jsonl(truth_records))
    write_text(out / "experts.jsonl", serialize_opinions(result.expert_opinions))
    write_text(out / "crowd.jsonl", serialize_opinions(result.crowd_opinions))
    write_text(out / "run.toml", dumps_config(cfg))
    manifest = {
        "note": SYNTHETIC_NOTE,
        "master_seed": cfg.simulator.master_seed,
        "n_cases": len(result.truth),
        "n_expert_opinions": len(result.expert_opinions),
        "n_crowd_opinions": len(result.crowd_opinions),
        "n_training_scores": len(result.ledger),
        "config": cfg.to_dict(),
    }
    write_text(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    return 0


def cmd_qscore(args) -> int:
    params = SimilarityParams(args.cutoff)
    opinions = [op for op in read_opinions(args.opinions, args.strict) if op.split == "train"]
    refs = {}
    for op in read_opinions(args.truth, args.strict):
        if op.case_id in refs:
            raise ValidationError(f"{args.truth}: more than one reference for case {op.case_id!r}")
        refs[op.case_id] = op.lines
    window = args.window
    if window != "all":
        try:
            window = int(window)
        except ValueError:
            raise ValidationError(f"--window must be 'all' or a positive integer, got {window!r}")
    ledger = build_ledger(opinions, refs, params, window=window)
    rows = []
    for annotator in ledger.annotators:
        for n, (ts, score) in enumerate(ledger.entries(annotator), start=1):
            rows.append([annotator, n, ts, repr(score), repr(ledger.qscore(annotator, ts + 1))])
    sys.stdout.write(
        dumps_csv(["annotator_id", "entry", "timestamp", "score", "trailing_qscore"], rows)
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lineconsensus",
        description="Dice-H scoring, consensus and evaluation of crowdsourced line annotations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--strict", action="store_true", help="reject unknown record fields")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "diceh", parents=[common], help="per-case Dice-H between two opinion files (CSV)"
    )
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--cutoff", type=float, default=5.0)
    p.set_defaults(func=cmd_diceh)

    p = sub.add_parser("consensus", parents=[common], help="clustering consensus per case (JSONL)")
    p.add_argument("opinions")
    p.add_argument("--out")
    p.add_argument("--config")
    p.add_argument("--merge-cutoff", type=float)
    p.add_argument("--majority-fraction", type=float)
    p.add_argument("--linkage", choices=["complete", "single", "average"])
    p.set_defaults(func=cmd_consensus)

    p = sub.add_parser("evaluate", parents=[common], help="full evaluation report (JSON + CSV)")
    p.add_argument("--experts", required=True)
    p.add_argument("--crowd", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--svg", action="store_true", help="also write SVG charts")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", parents=[common], help="synthetic contest (JSONL)")
    p.add_argument("--config")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, help=f"master seed (overrides config and ${SEED_ENV})")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("qscore", parents=[common], help="per-user training score ledger (CSV)")
    p.add_argument("opinions")
    p.add_argument("--truth", required=True, help="reference line sets (JSONL)")
    p.add_argument("--cutoff", type=float, default=10.0)
    p.add_argument("--window", default="all")
    p.set_defaults(func=cmd_qscore)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        status = args.func(args)
        sys.stdout.flush()
        return status
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InvariantError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except Exception:
        log.exception("unexpected failure")
        return 2


if __name__ == "__main__":
    sys.exit(main())
