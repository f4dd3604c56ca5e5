"""End-to-end tests for the ``relcom`` command line.

Every test drives ``cli.main(argv)`` in-process so exit codes and
stdout/stderr can be asserted directly; one test goes through the
installed console script to catch packaging regressions.
"""

from __future__ import annotations

import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from relcom import cli, pipeline, synth
from relcom.corpus import CommunityIndex


@pytest.fixture(scope="module")
def corpus_file(tmp_path_factory, std_corpus):
    events, _ = std_corpus
    path = tmp_path_factory.mktemp("clicorpus") / "events.jsonl"
    synth.write_jsonl(events, path)
    return path


@pytest.fixture(scope="module")
def staged_dir(tmp_path_factory, corpus_file):
    """Bundle built by chaining the individual subcommands."""
    d = tmp_path_factory.mktemp("staged")
    argvs = [
        ["ingest", "--input", str(corpus_file), "--dir", str(d)],
        ["pairs", "--dir", str(d), "--min-affix-count", "1"],
        ["similarity", "--dir", str(d)],
        ["characterize", "--dir", str(d), "--monthly"],
        ["explore", "--dir", str(d), "--min-k", "5"],
    ]
    for argv in argvs:
        assert cli.main(argv + ["--quiet"]) == 0, argv
    return d


STAGE_FILES = ["stats.csv", "pairs.csv", "similarity.csv", "spinoffs.csv",
               "monthly.csv", "explore.csv", "quartiles.csv",
               "categories.csv", "dropped.csv"]


def test_staged_chain_writes_all_files(staged_dir):
    for name in ["index.bin"] + STAGE_FILES:
        assert (staged_dir / name).exists(), name


def test_run_subcommand_matches_staged_chain(tmp_path, corpus_file,
                                             staged_dir):
    d = tmp_path / "viarun"
    rc = cli.main(["run", "--input", str(corpus_file), "--dir", str(d),
                   "--min-affix-count", "1", "--min-k", "5", "--monthly",
                   "--quiet"])
    assert rc == 0
    assert (d / "manifest.json").exists()
    assert not (d / pipeline.PARTIAL_MARKER).exists()
    for name in STAGE_FILES:
        assert (d / name).read_bytes() == (staged_dir / name).read_bytes(), name


def test_run_reads_config_file_with_cli_override(tmp_path, corpus_file):
    cfg_path = tmp_path / "cfg.json"
    cfg = pipeline.PipelineConfig(min_k=7, seed=5, min_affix_count=1,
                                  emit_monthly=True)
    cfg_path.write_text(json.dumps(cfg.to_dict()), encoding="utf-8")
    d = tmp_path / "out"
    rc = cli.main(["run", "--config", str(cfg_path), "--input",
                   str(corpus_file), "--dir", str(d), "--min-k", "5",
                   "--quiet"])
    assert rc == 0
    with open(d / "manifest.json", encoding="utf-8") as fh:
        overrides = json.load(fh)["overrides"]
    assert overrides["min_k"] == 5        # command line beats the file
    assert overrides["seed"] == 5         # untouched file setting survives
    assert overrides["min_affix_count"] == 1


def test_run_rejects_bad_config_json(tmp_path):
    bad = tmp_path / "cfg.json"
    bad.write_text("{not json", encoding="utf-8")
    assert cli.main(["run", "--config", str(bad), "--quiet"]) == 2


def test_ingest_index_stats_on_stdout(tmp_path, corpus_file, capsys):
    d = tmp_path / "ing"
    rc = cli.main(["ingest", "--input", str(corpus_file), "--dir", str(d),
                   "--index-stats", "--quiet"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out == (d / "stats.csv").read_text(encoding="utf-8")
    assert out.startswith("community,")


def test_ingest_exclude_users(tmp_path):
    src = tmp_path / "tiny.jsonl"
    rows = [{"community": "c", "user": u, "ts": i, "kind": "post"}
            for i, u in enumerate(["ann", "bob", "cho", "dee"])]
    src.write_text("".join(json.dumps(r) + "\n" for r in rows),
                   encoding="utf-8")
    d = tmp_path / "out"
    rc = cli.main(["ingest", "--input", str(src), "--dir", str(d),
                   "--exclude-users", "ann,bob", "--exclude-users", "dee",
                   "--quiet"])
    assert rc == 0
    index = CommunityIndex.load(d / "index.bin")
    assert list(index.user_names) == ["cho"]
    assert index.n_events == 1


def test_ingest_missing_input_is_clean_error(tmp_path, capsys):
    rc = cli.main(["ingest", "--input", str(tmp_path / "nope.jsonl"),
                   "--dir", str(tmp_path), "--quiet"])
    assert rc == 1
    assert capsys.readouterr().err.startswith("error:")


def test_stage_without_index_exits_2(tmp_path, capsys):
    rc = cli.main(["pairs", "--dir", str(tmp_path), "--quiet"])
    assert rc == 2
    assert "run `relcom ingest` first" in capsys.readouterr().err


def test_stage_without_earlier_outputs_exits_2(tmp_path, corpus_file, capsys):
    d = tmp_path / "partial"
    assert cli.main(["ingest", "--input", str(corpus_file), "--dir", str(d),
                     "--quiet"]) == 0
    rc = cli.main(["similarity", "--dir", str(d), "--quiet"])
    assert rc == 2
    assert "run the earlier stages first" in capsys.readouterr().err


def test_spinoffs_filters_and_prints_summary(staged_dir, capsys):
    rc = cli.main(["spinoffs", "--dir", str(staged_dir), "--quiet"])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    spin = pipeline.read_spinoffs_csv(staged_dir / "spinoff_pairs.csv")
    assert all(r.spinoff for r in spin)
    assert summary["summary"]["n_pairs"] == len(spin)


def test_report_writes_tables_and_prints_summary(staged_dir, capsys):
    rc = cli.main(["report", "--dir", str(staged_dir), "--quiet"])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert "summary" in summary and "overtake_share" in summary
    for name in ("report_summary.json", "report_monthly.csv",
                 "report_gap_cohort.csv"):
        assert (staged_dir / name).exists(), name


def test_synth_config_roundtrip_through_cli(tmp_path, std_cfg):
    cfg_path = tmp_path / "synth.json"
    cfg_path.write_text(json.dumps(std_cfg.to_dict()), encoding="utf-8")
    out = tmp_path / "corpus.jsonl"
    man = tmp_path / "truth.json"
    rc = cli.main(["synth", "--config", str(cfg_path), "--out", str(out),
                   "--manifest", str(man), "--quiet"])
    assert rc == 0
    with open(man, encoding="utf-8") as fh:
        truth = json.load(fh)
    n_lines = sum(1 for _ in open(out, encoding="utf-8"))
    assert truth["corpus"]["n_events"] == n_lines
    assert {(p["base"], p["modified"]) for p in truth["pairs"]} \
        == {(p.base, p.modified) for p in std_cfg.pairs}


def test_synth_bulk_events(tmp_path):
    out = tmp_path / "bulk.jsonl"
    rc = cli.main(["synth", "--out", str(out), "--bulk-events", "1500",
                   "--communities", "10", "--users", "400", "--seed", "3",
                   "--quiet"])
    assert rc == 0
    assert sum(1 for _ in open(out, encoding="utf-8")) == 1500


def test_synth_flag_validation(tmp_path, capsys):
    assert cli.main(["synth", "--out", str(tmp_path / "x.jsonl"),
                     "--quiet"]) == 2
    assert cli.main(["synth", "--config", str(tmp_path / "cfg.json"),
                     "--out", str(tmp_path / "x.jsonl"), "--quiet"]) == 2
    err = capsys.readouterr().err
    assert "--bulk-events" in err and "--manifest" in err


def test_argparse_help_and_usage_errors():
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["ingest"])  # --input is required
    assert exc.value.code == 2


def test_console_script_installed():
    exe = shutil.which("relcom")
    assert exe, "console script not on PATH"
    proc = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "ingest" in proc.stdout and "explore" in proc.stdout


def test_module_invocation(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "relcom.cli", "pairs", "--dir", str(tmp_path)],
        capture_output=True, text=True)
    assert proc.returncode == 2
    assert "run `relcom ingest` first" in proc.stderr
