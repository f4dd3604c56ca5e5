"""Command-line entry points.

Subcommands map one-to-one onto pipeline stages and communicate through
the bundle directory (--dir), so a full run can be driven either by
`relcom run` or by chaining the stages by hand:

    relcom ingest --input corpus.jsonl --dir out --index-stats
    relcom pairs --dir out --min-posters 300 --min-affix-count 3
    relcom similarity --dir out
    relcom characterize --dir out
    relcom spinoffs --dir out
    relcom explore --dir out --window-days 30 --min-k 100 --seed 0
    relcom report --dir out

Synthetic corpora come from `relcom synth --config synth.json --out
corpus.jsonl --manifest truth.json`.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline, synth
from .corpus import CommunityIndex
from .errors import ConfigurationError, RelcomError
from .kernels import backend_name

log = logging.getLogger("relcom")


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--dir", default=".", help="bundle directory (default: .)")
    sp.add_argument("--quiet", action="store_true", help="errors only")


def _knob(sp, name, typ, help_):
    sp.add_argument(name, type=typ, default=None, help=help_)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="relcom",
        description="Affix-pair analytics over community event logs")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ingest", help="parse a corpus into an index")
    _add_common(sp)
    sp.add_argument("--input", required=True, help="corpus path")
    sp.add_argument("--format", default="jsonl", choices=("jsonl", "csv"))
    sp.add_argument("--exclude-users", action="append", default=[],
                    metavar="NAMES", help="comma-separated users to drop "
                    "(repeatable)")
    sp.add_argument("--index-stats", action="store_true",
                    help="dump per-community aggregates as CSV on stdout")

    sp = sub.add_parser("pairs", help="detect affix pairs")
    _add_common(sp)
    _knob(sp, "--min-posters", int, "eligibility cutoff (default 300)")
    _knob(sp, "--min-affix-count", int,
          "min occurrences of an affix (default 3)")

    sp = sub.add_parser("similarity", help="score pairs against background")
    _add_common(sp)
    sp.add_argument("--topic-file", default=None,
                    help="topic vectors JSONL; omit for unigram fallback")
    _knob(sp, "--min-posters", int, "eligibility cutoff (default 300)")
    _knob(sp, "--threshold-pct", float, "related threshold (default 90)")
    _knob(sp, "--workers", int, "background computation threads")

    sp = sub.add_parser("characterize",
                        help="temporal/activity/membership characterization")
    _add_common(sp)
    sp.add_argument("--taxonomy", default=None, help="taxonomy JSON path")
    _knob(sp, "--n-early", int, "early-participant pool size (default 100)")
    _knob(sp, "--member-window-days", int, "membership lookback (default 30)")
    _knob(sp, "--spinoff-threshold", float,
          "early-fraction cutoff (default 0.10, strict)")
    _knob(sp, "--horizon-months", int, "monthly series cap (default 24)")
    sp.add_argument("--monthly", action="store_true",
                    help="also write monthly.csv ratio series")

    sp = sub.add_parser("spinoffs", help="filter spinoff pairs + summary")
    _add_common(sp)

    sp = sub.add_parser("explore", help="matched explorer/control experiment")
    _add_common(sp)
    _knob(sp, "--window-days", int, "pre/post window (default 30)")
    _knob(sp, "--match-hours", int, "candidate anchor window (default 24)")
    _knob(sp, "--tolerance", float, "pre-count tolerance (default 0.05)")
    _knob(sp, "--min-pre", int, "min explorer pre-count (default 5)")
    _knob(sp, "--min-k", int, "min matched pairs per pair (default 100)")
    _knob(sp, "--resamples", int, "bootstrap resamples (default 1000)")
    _knob(sp, "--seed", int, "bootstrap seed (default 0)")

    sp = sub.add_parser("synth", help="generate a synthetic corpus")
    sp.add_argument("--config", default=None, help="generator config JSON")
    sp.add_argument("--out", required=True, help="corpus JSONL to write")
    sp.add_argument("--manifest", default=None,
                    help="ground-truth manifest to write")
    sp.add_argument("--bulk-events", type=int, default=None,
                    help="instead of a config: plain corpus of N events")
    sp.add_argument("--communities", type=int, default=50)
    sp.add_argument("--users", type=int, default=200_000)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--quiet", action="store_true")

    sp = sub.add_parser("report", help="plot-ready tables from a bundle")
    _add_common(sp)
    _knob(sp, "--horizon-months", int, "monthly series cap (default 24)")

    sp = sub.add_parser("run", help="run every stage into a bundle")
    _add_common(sp)
    sp.add_argument("--input", default=None, help="corpus path")
    sp.add_argument("--format", default=None, choices=("jsonl", "csv"))
    sp.add_argument("--config", default=None, help="pipeline config JSON")
    sp.add_argument("--topic-file", default=None)
    sp.add_argument("--taxonomy", default=None)
    sp.add_argument("--monthly", action="store_true")
    for name, typ in (("--min-posters", int), ("--threshold-pct", float),
                      ("--min-affix-count", int), ("--n-early", int),
                      ("--member-window-days", int),
                      ("--spinoff-threshold", float),
                      ("--horizon-months", int), ("--window-days", int),
                      ("--match-hours", int), ("--tolerance", float),
                      ("--min-pre", int), ("--min-k", int),
                      ("--resamples", int), ("--seed", int),
                      ("--workers", int)):
        _knob(sp, name, typ, argparse.SUPPRESS)

    return ap


_KNOB_FIELDS = ("min_posters", "threshold_pct", "min_affix_count", "n_early",
                "member_window_days", "spinoff_threshold", "horizon_months",
                "window_days", "match_hours", "tolerance", "min_pre",
                "min_k", "resamples", "seed", "workers")


def _config_from_args(args) -> pipeline.PipelineConfig:
    if getattr(args, "config", None):
        cfg = pipeline.PipelineConfig.from_file(args.config)
    else:
        cfg = pipeline.PipelineConfig()
    for name in _KNOB_FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    if getattr(args, "input", None):
        cfg.input = args.input
    if getattr(args, "format", None):
        cfg.fmt = args.format
    if getattr(args, "topic_file", None):
        cfg.topic_file = args.topic_file
    if getattr(args, "taxonomy", None):
        cfg.taxonomy_file = args.taxonomy
    if getattr(args, "monthly", False):
        cfg.emit_monthly = True
    return cfg


def _load_index(dirpath: Path) -> CommunityIndex:
    p = dirpath / "index.bin"
    if not p.exists():
        raise ConfigurationError(f"{p}: no index found; run `relcom ingest` first")
    return CommunityIndex.load(p)


def _need(dirpath: Path, name: str) -> Path:
    p = dirpath / name
    if not p.exists():
        raise ConfigurationError(f"{p}: missing; run the earlier stages first")
    return p


def _cmd_ingest(args) -> int:
    d = Path(args.dir)
    d.mkdir(parents=True, exist_ok=True)
    cfg = pipeline.PipelineConfig(input=args.input, fmt=args.format)
    for chunk in args.exclude_users:
        cfg.exclude_users.extend(u for u in chunk.split(",") if u)
    index, stats = pipeline.stage_ingest(cfg, d / "index.bin", d / "stats.csv")
    log.info("indexed %d events, %d communities, %d users (%d lines skipped) "
             "[%s backend]", index.n_events, index.n_communities,
             index.n_users, stats.skipped, backend_name())
    if args.index_stats:
        sys.stdout.write((d / "stats.csv").read_text(encoding="utf-8"))
    return 0


def _cmd_pairs(args) -> int:
    d = Path(args.dir)
    cfg = _config_from_args(args)
    index = _load_index(d)
    pairs = pipeline.stage_pairs(cfg, index)
    n = pipeline.write_pairs_csv(pairs, d / "pairs.csv")
    log.info("wrote %d affix pairs to %s", n, d / "pairs.csv")
    return 0


def _cmd_similarity(args) -> int:
    d = Path(args.dir)
    cfg = _config_from_args(args)
    index = _load_index(d)
    pairs = pipeline.read_pairs_csv(_need(d, "pairs.csv"))
    result = pipeline.stage_similarity(cfg, index, pairs)
    n = pipeline.write_similarity_csv(result.scores, d / "similarity.csv")
    log.info("scored %d pairs (%d related) against %d background pairs "
             "(topics: %s)", n, len(result.related), result.n_link_background,
             result.topic_source)
    return 0


def _cmd_characterize(args) -> int:
    d = Path(args.dir)
    cfg = _config_from_args(args)
    index = _load_index(d)
    pairs = pipeline.read_pairs_csv(_need(d, "pairs.csv"))
    scores = pipeline.read_similarity_csv(_need(d, "similarity.csv"), pairs)
    rows = pipeline.stage_characterize(cfg, index, scores)
    n = pipeline.write_spinoffs_csv(rows, d / "spinoffs.csv")
    if cfg.emit_monthly:
        pipeline.write_monthly_csv(index, rows, d / "monthly.csv",
                                   cfg.horizon_months)
    log.info("characterized %d related pairs (%d spinoffs)", n,
             sum(r.spinoff for r in rows))
    return 0


def _cmd_spinoffs(args) -> int:
    d = Path(args.dir)
    rows = pipeline.read_spinoffs_csv(_need(d, "spinoffs.csv"))
    spin = [r for r in rows if r.spinoff]
    pipeline.write_spinoffs_csv(spin, d / "spinoff_pairs.csv")
    from .dynamics import category_counts, gap_summary
    summary = {"summary": gap_summary(spin),
               "category_counts": category_counts(spin)}
    json.dump(summary, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def _cmd_explore(args) -> int:
    d = Path(args.dir)
    cfg = _config_from_args(args)
    index = _load_index(d)
    rows = pipeline.read_spinoffs_csv(_need(d, "spinoffs.csv"))
    result, agg = pipeline.stage_explore(cfg, index, rows)
    pipeline.write_explore_csv(result.experiments, d / "explore.csv")
    pipeline.write_quartiles_csv(result.quartiles, d / "quartiles.csv")
    pipeline.write_categories_csv(agg, d / "categories.csv")
    pipeline.write_dropped_csv(result.dropped, d / "dropped.csv")
    log.info("experiments: %d reported, %d dropped",
             len(result.experiments), len(result.dropped))
    if agg.get("overall"):
        log.info("overall effect %.4f (macro average over %d pairs)",
                 agg["overall"]["effect"], agg["overall"]["n_pairs"])
    return 0


def _cmd_synth(args) -> int:
    if args.bulk_events is not None:
        synth.bulk_corpus(args.out, args.bulk_events,
                          n_communities=args.communities,
                          n_users=args.users, seed=args.seed)
        log.info("wrote %d plain events to %s", args.bulk_events, args.out)
        return 0
    if args.config is None:
        raise ConfigurationError("synth needs --config (or --bulk-events)")
    if args.manifest is None:
        raise ConfigurationError("synth needs --manifest with --config")
    cfg = synth.SynthConfig.from_file(args.config)
    truth = synth.generate_files(cfg, args.out, args.manifest)
    log.info("wrote %d events (%d communities) to %s; truth in %s",
             truth["corpus"]["n_events"], truth["corpus"]["n_communities"],
             args.out, args.manifest)
    return 0


def _cmd_report(args) -> int:
    d = Path(args.dir)
    cfg = _config_from_args(args)
    index = _load_index(d)
    rows = pipeline.read_spinoffs_csv(_need(d, "spinoffs.csv"))
    overrides = {}
    mpath = d / "manifest.json"
    if mpath.exists():
        with open(mpath, "r", encoding="utf-8") as fh:
            overrides = json.load(fh).get("overrides", {})
    summary = pipeline.write_report(index, rows, d, cfg.horizon_months,
                                    overrides)
    json.dump(summary, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    manifest = pipeline.run_pipeline(cfg, args.dir)
    log.info("bundle complete in %s (%s)", args.dir,
             ", ".join(f"{k}={v}" for k, v in manifest["rows"].items()))
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "pairs": _cmd_pairs,
    "similarity": _cmd_similarity,
    "characterize": _cmd_characterize,
    "spinoffs": _cmd_spinoffs,
    "explore": _cmd_explore,
    "synth": _cmd_synth,
    "report": _cmd_report,
    "run": _cmd_run,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if getattr(args, "quiet", False) else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RelcomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
