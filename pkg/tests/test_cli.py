import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from lineconsensus import cli
from lineconsensus.io import read_opinions
from lineconsensus.validation import InvariantError

DATA = Path(__file__).parent / "data"

SMALL_TOML = """\
[simulator]
n_train_cases = 30
n_test_cases = 10
n_crowd = 20
opinions_per_crowd_user = 40.0
master_seed = 11

[selection]
min_training_opinions = 3

[bootstrap]
replicates = 500
"""


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("small")
    cfg = root / "run.toml"
    cfg.write_text(SMALL_TOML)
    assert cli.main(["simulate", "--config", str(cfg), "--out-dir", str(root / "sim")]) == 0
    return root, cfg


def test_simulate_outputs(small_run):
    root, _ = small_run
    sim = root / "sim"
    for name in ("truth.jsonl", "experts.jsonl", "crowd.jsonl", "run.toml", "manifest.json"):
        assert (sim / name).exists()
    manifest = json.loads((sim / "manifest.json").read_text())
    assert manifest["master_seed"] == 11 and "Synthetic" in manifest["note"]
    assert len(read_opinions(sim / "truth.jsonl")) == 40


def test_diceh_self_comparison(small_run, capsys):
    f = small_run[0] / "sim" / "experts.jsonl"
    code, out, _ = run(["diceh", f, f, "--cutoff", 5], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 40 * 5
    assert all(float(r["dice_h"]) == 1.0 for r in rows)


def test_consensus_single_annotator(small_run, capsys, tmp_path):
    truth = small_run[0] / "sim" / "truth.jsonl"
    out = tmp_path / "consensus.jsonl"
    code, _, _ = run(["consensus", truth, "--out", out], capsys)
    assert code == 0
    want = {o.case_id: o.lines for o in read_opinions(truth)}
    got = {o.case_id: o.lines for o in read_opinions(out)}
    assert got == want


def test_qscore_dump(small_run, capsys):
    sim = small_run[0] / "sim"
    code, out, _ = run(["qscore", sim / "crowd.jsonl", "--truth", sim / "truth.jsonl"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and rows[0]["trailing_qscore"] == rows[0]["score"]
    assert all(0.0 <= float(r["score"]) <= 1.0 for r in rows)


def test_evaluate_writes_outputs(small_run, capsys, tmp_path):
    root, cfg = small_run
    sim = root / "sim"
    code, _, err = run(["evaluate", "--experts", sim / "experts.jsonl", "--crowd",
                        sim / "crowd.jsonl", "--config", cfg, "--out", tmp_path / "report.json",
                        "--svg"], capsys)
    assert code == 0, err
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["schema_version"] == "1.0"
    assert report["config"]["simulator"]["master_seed"] == 11
    assert report["seeds"] == {"bootstrap": 0, "simulator": 11}
    assert report["data_note"].startswith("Synthetic data")
    low, high = report["dice_h"]["diff_bca_ci"]
    assert low <= high
    for name in ("learning_curve.csv", "figure3b_bootstrap.csv", "learning_curve.svg",
                 "figure3b_bootstrap.svg"):
        assert (tmp_path / name).exists()
    reps = list(csv.DictReader(io.StringIO((tmp_path / "figure3b_bootstrap.csv").read_text())))
    assert len(reps) == 500


def test_simulate_evaluate_byte_identical(small_run, capsys, tmp_path):
    _, cfg = small_run
    reports = []
    for i in range(2):
        d = tmp_path / f"r{i}"
        assert cli.main(["simulate", "--config", str(cfg), "--out-dir", str(d)]) == 0
        assert cli.main(["evaluate", "--experts", str(d / "experts.jsonl"), "--crowd",
                         str(d / "crowd.jsonl"), "--config", str(cfg),
                         "--out", str(d / "report.json")]) == 0
        reports.append((d / "report.json").read_bytes())
    assert reports[0] == reports[1]


def test_validation_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"case_id": "c", "annotator_id": "a", "timestamp": 0, "split": "test", '
                   '"lines": [[101, 0, 50, 100]]}\n')
    code, _, err = run(["consensus", bad], capsys)
    assert code == 1
    assert "line 1" in err and "lines[0][0]" in err


def test_missing_file_exit_code(capsys, tmp_path):
    code, _, _ = run(["diceh", tmp_path / "a.jsonl", tmp_path / "b.jsonl"], capsys)
    assert code == 1


def test_bad_window_exit_code(small_run, capsys):
    sim = small_run[0] / "sim"
    code, _, _ = run(["qscore", sim / "crowd.jsonl", "--truth", sim / "truth.jsonl",
                      "--window", "many"], capsys)
    assert code == 1


def test_invariant_violation_exit_code(small_run, capsys, monkeypatch, tmp_path):
    def broken(*args, **kwargs):
        raise InvariantError("CI endpoints out of order")

    monkeypatch.setattr(cli, "evaluate_protocol", broken)
    sim = small_run[0] / "sim"
    code, _, err = run(["evaluate", "--experts", sim / "experts.jsonl", "--crowd",
                        sim / "crowd.jsonl", "--out", tmp_path / "r.json"], capsys)
    assert code == 2 and "invariant" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lineconsensus", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "lineconsensus" in proc.stdout


@pytest.mark.slow
def test_golden_report(tmp_path, monkeypatch):
    monkeypatch.delenv("LINECONSENSUS_SEED", raising=False)
    assert cli.main(["simulate", "--out-dir", str(tmp_path)]) == 0
    assert cli.main(["evaluate", "--experts", str(tmp_path / "experts.jsonl"), "--crowd",
                     str(tmp_path / "crowd.jsonl"), "--out", str(tmp_path / "report.json")]) == 0
    assert (tmp_path / "report.json").read_bytes() == (DATA / "golden_report.json").read_bytes()
