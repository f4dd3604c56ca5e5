"""End-to-end orchestration and the on-disk bundle format.

A "bundle" is a directory of plain CSV/JSON artifacts, one per stage:

    index.bin       columnar corpus index (internal format)
    stats.csv       community,first_ts,posters,events
    pairs.csv       base,modified,affix,position
    similarity.csv  base,modified,jaccard,js,link_pct,topic_pct,related
    spinoffs.csv    base,modified,older,newer,gap_days,modified_is_newer,
                    log_ratio,early_frac,spinoff,category
    monthly.csv     pair,month,log_ratio            (optional)
    explore.csv     pair,k,p_e,p_ne,effect,ci_lo,ci_hi
    quartiles.csv   pair,quartile,p_e,p_ne,n
    categories.csv  category,n_pairs,p_e,p_ne,effect
    dropped.csv     pair,k,reason
    manifest.json   config echo, row counts, warnings

Stages communicate only through these files, so each is independently
re-runnable; `run_pipeline` simply chains them. While a run is in flight
the bundle holds a RUN.partial marker; it is removed on success, so a
bundle containing it is incomplete output from a failed run.

Identical corpus + config yields byte-identical bundles: floats are
written with repr (shortest round-trip form), missing values as empty
fields, booleans as true/false, and nothing records wall-clock time.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import affix as affix_mod
from . import dynamics, exploration, similarity
from .affix import AffixPair, Taxonomy
from .corpus import CommunityIndex, eligible_communities, load_corpus
from .errors import ConfigurationError
from .similarity import PairScore

log = logging.getLogger(__name__)

PARTIAL_MARKER = "RUN.partial"


@dataclass
class PipelineConfig:
    """Every knob of the analysis, with the defaults used throughout."""
    input: str | None = None
    fmt: str = "jsonl"
    topic_file: str | None = None
    taxonomy_file: str | None = None
    exclude_users: list[str] = field(default_factory=list)
    min_posters: int = 300
    threshold_pct: float = 90.0
    min_affix_count: int = 3
    n_early: int = 100
    member_window_days: int = 30
    spinoff_threshold: float = 0.10
    horizon_months: int = 24
    emit_monthly: bool = False
    window_days: int = 30
    match_hours: int = 24
    tolerance: float = 0.05
    min_pre: int = 5
    min_k: int = 100
    resamples: int = 1000
    seed: int = 0
    workers: int = 1

    def explore_params(self) -> exploration.ExploreParams:
        return exploration.ExploreParams(
            window_days=self.window_days, match_hours=self.match_hours,
            min_pre=self.min_pre, tolerance=self.tolerance,
            min_k=self.min_k, resamples=self.resamples, seed=self.seed)

    def taxonomy(self) -> Taxonomy:
        return Taxonomy.load(self.taxonomy_file)

    def overrides(self) -> dict:
        """Fields that differ from the defaults; echoed in run manifests
        so every run is self-describing."""
        base = PipelineConfig()
        return {f.name: getattr(self, f.name) for f in fields(self)
                if getattr(self, f.name) != getattr(base, f.name)}

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        bad = set(raw) - known
        if bad:
            raise ConfigurationError(f"unknown config keys: {sorted(bad)}")
        return cls(**raw)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except ValueError as exc:
                raise ConfigurationError(f"{path}: bad JSON ({exc})") from None
        return cls.from_dict(raw)


# ------------------------------------------------------------- formatting

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_float(s: str) -> float | None:
    return None if s == "" else float(s)


def _parse_bool(s: str) -> bool:
    if s == "true":
        return True
    if s == "false":
        return False
    raise ConfigurationError(f"expected true/false, got {s!r}")


def _write_csv(path, header: list[str], rows) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row in rows:
            out.writerow([_fmt(v) for v in row])
            n += 1
    return n


def _read_csv(path, header: list[str]):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rd = csv.reader(fh)
        got = next(rd, None)
        if got != header:
            raise ConfigurationError(
                f"{path}: expected header {','.join(header)}, got "
                f"{','.join(got) if got else '<empty>'}")
        yield from rd


# --------------------------------------------------------------- writers

STATS_HEADER = ["community", "first_ts", "posters", "events"]
PAIRS_HEADER = ["base", "modified", "affix", "position"]
SIMILARITY_HEADER = ["base", "modified", "jaccard", "js", "link_pct",
                     "topic_pct", "related"]
SPINOFFS_HEADER = ["base", "modified", "older", "newer", "gap_days",
                   "modified_is_newer", "log_ratio", "early_frac",
                   "spinoff", "category"]
MONTHLY_HEADER = ["pair", "month", "log_ratio"]
EXPLORE_HEADER = ["pair", "k", "p_e", "p_ne", "effect", "ci_lo", "ci_hi"]
QUARTILES_HEADER = ["pair", "quartile", "p_e", "p_ne", "n"]
CATEGORIES_HEADER = ["category", "n_pairs", "p_e", "p_ne", "effect"]
DROPPED_HEADER = ["pair", "k", "reason"]


def write_stats_csv(index: CommunityIndex, path) -> int:
    return _write_csv(path, STATS_HEADER, index.stats_rows())


def write_pairs_csv(pairs, path) -> int:
    return _write_csv(path, PAIRS_HEADER,
                      ((p.base, p.modified, p.affix, p.position)
                       for p in pairs))


def read_pairs_csv(path) -> list[AffixPair]:
    return [AffixPair(b, m, a, pos)
            for b, m, a, pos in _read_csv(path, PAIRS_HEADER)]


def write_similarity_csv(scores, path) -> int:
    return _write_csv(path, SIMILARITY_HEADER,
                      ((s.base, s.modified, s.jaccard, s.js, s.link_pct,
                        s.topic_pct, s.related) for s in scores))


def read_similarity_csv(path, pairs) -> list[PairScore]:
    """Scores re-joined with their affix/position from the pairs table."""
    ap = {(p.base, p.modified): p for p in pairs}
    out = []
    for b, m, jac, js, lp, tp, rel in _read_csv(path, SIMILARITY_HEADER):
        p = ap.get((b, m))
        if p is None:
            raise ConfigurationError(f"similarity row {b},{m} not in pairs table")
        out.append(PairScore(b, m, p.affix, p.position, float(jac),
                             _parse_float(js), float(lp), _parse_float(tp),
                             _parse_bool(rel)))
    return out


def write_spinoffs_csv(rows, path) -> int:
    return _write_csv(path, SPINOFFS_HEADER,
                      ((r.base, r.modified, r.older, r.newer, r.gap_days,
                        r.modified_is_newer, r.log_ratio, r.early_frac,
                        r.spinoff, r.category) for r in rows))


def read_spinoffs_csv(path) -> list[dynamics.SpinoffRow]:
    out = []
    for row in _read_csv(path, SPINOFFS_HEADER):
        b, m, o, n, gap, newer, lr, ef, spin, cat = row
        affix, position = _affix_of(b, m)
        out.append(dynamics.SpinoffRow(
            base=b, modified=m, affix=affix, position=position,
            older=o, newer=n, gap_days=float(gap),
            modified_is_newer=_parse_bool(newer), log_ratio=float(lr),
            early_frac=float(ef), spinoff=_parse_bool(spin), category=cat))
    return out


def _affix_of(base: str, modified: str) -> tuple[str, str]:
    # suffix reading first, matching detection's ambiguity rule
    if modified.startswith(base):
        return modified[len(base):], affix_mod.SUFFIX
    return modified[: len(modified) - len(base)], affix_mod.PREFIX


def write_monthly_csv(index: CommunityIndex, rows, path,
                      horizon_months: int) -> int:
    def gen():
        for r in rows:
            series = dynamics.monthly_ratio_series(index, r.base, r.modified,
                                                   horizon_months)
            pair = f"{r.older}/{r.newer}"
            for month, v in enumerate(series):
                yield pair, month, float(v)
    return _write_csv(path, MONTHLY_HEADER, gen())


def write_explore_csv(experiments, path) -> int:
    return _write_csv(path, EXPLORE_HEADER,
                      ((e.pair, e.k, e.p_e, e.p_ne, e.effect, e.ci_lo,
                        e.ci_hi) for e in experiments))


def write_quartiles_csv(quartiles, path) -> int:
    return _write_csv(path, QUARTILES_HEADER,
                      ((q["pair"], q["quartile"], q["p_e"], q["p_ne"],
                        q["n"]) for q in quartiles))


def write_categories_csv(agg: dict, path) -> int:
    def gen():
        for cat, entry in agg.get("by_category", {}).items():
            yield (cat, entry["n_pairs"], entry["p_e"], entry["p_ne"],
                   entry["effect"])
    return _write_csv(path, CATEGORIES_HEADER, gen())


def write_dropped_csv(dropped, path) -> int:
    return _write_csv(path, DROPPED_HEADER,
                      ((d.pair, d.k, d.reason) for d in dropped))


# ---------------------------------------------------------------- stages

def stage_ingest(cfg: PipelineConfig, index_path, stats_path=None):
    """Parse the input corpus into an index file (+ optional stats CSV)."""
    if cfg.input is None:
        raise ConfigurationError("no input corpus configured")
    index, stats = load_corpus(cfg.input, cfg.fmt,
                               exclude_users=cfg.exclude_users)
    index.save(index_path)
    if stats.skipped:
        log.warning("skipped %d malformed input lines", stats.skipped)
    if stats_path is not None:
        write_stats_csv(index, stats_path)
    return index, stats


def stage_pairs(cfg: PipelineConfig, index: CommunityIndex) -> list[AffixPair]:
    """Detect affix pairs among eligible communities, frequency-filtered."""
    elig = eligible_communities(index, cfg.min_posters)
    pairs = affix_mod.detect_pairs(elig)
    return affix_mod.filter_affix_frequency(pairs, cfg.min_affix_count) \
        if cfg.min_affix_count > 1 else pairs


def stage_similarity(cfg: PipelineConfig, index: CommunityIndex,
                     pairs) -> similarity.SimilarityResult:
    elig = eligible_communities(index, cfg.min_posters)
    if cfg.topic_file is None:
        log.warning("no topic file; falling back to smoothed unigram "
                    "distributions over community text")
    return similarity.score_pairs(
        index, pairs, elig, topic_file=cfg.topic_file,
        threshold_pct=cfg.threshold_pct, workers=cfg.workers)


def stage_characterize(cfg: PipelineConfig, index: CommunityIndex,
                       scores) -> list[dynamics.SpinoffRow]:
    """Temporal/activity/membership characterization of related pairs."""
    related = [s for s in scores if s.related]
    return dynamics.classify_spinoffs(
        index, related, cfg.taxonomy(),
        early_threshold=cfg.spinoff_threshold, n_early=cfg.n_early,
        member_window_days=cfg.member_window_days)


def stage_explore(cfg: PipelineConfig, index: CommunityIndex,
                  rows) -> tuple[exploration.ExperimentResult, dict]:
    """Matched experiment over the spinoff pairs plus the category rollup."""
    spin = [r for r in rows if r.spinoff]
    result = exploration.run_experiment(
        index, [(r.older, r.newer) for r in spin], cfg.explore_params())
    categories = {f"{r.older}/{r.newer}": r.category for r in spin}
    agg = exploration.aggregate_effects(result.experiments, categories)
    for d in result.dropped:
        log.info("dropped pair %s: %s", d.pair, d.reason)
    return result, agg


# ------------------------------------------------------------------- run

def run_pipeline(cfg: PipelineConfig, out_dir) -> dict:
    """Run every stage into a bundle directory; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / PARTIAL_MARKER
    marker.write_text("run in progress or failed; outputs incomplete\n")

    index, stats = stage_ingest(cfg, out / "index.bin", out / "stats.csv")
    counts = {"stats": index.n_communities}

    pairs = stage_pairs(cfg, index)
    counts["pairs"] = write_pairs_csv(pairs, out / "pairs.csv")

    scores = stage_similarity(cfg, index, pairs)
    counts["similarity"] = write_similarity_csv(scores.scores,
                                                out / "similarity.csv")

    rows = stage_characterize(cfg, index, scores.scores)
    counts["spinoffs"] = write_spinoffs_csv(rows, out / "spinoffs.csv")
    if cfg.emit_monthly:
        counts["monthly"] = write_monthly_csv(index, rows, out / "monthly.csv",
                                              cfg.horizon_months)

    result, agg = stage_explore(cfg, index, rows)
    counts["explore"] = write_explore_csv(result.experiments,
                                          out / "explore.csv")
    counts["quartiles"] = write_quartiles_csv(result.quartiles,
                                              out / "quartiles.csv")
    counts["categories"] = write_categories_csv(agg, out / "categories.csv")
    counts["dropped"] = write_dropped_csv(result.dropped, out / "dropped.csv")

    warnings = []
    if cfg.topic_file is None:
        warnings.append("topic vectors derived from unigram fallback")
    if stats.skipped:
        warnings.append(f"{stats.skipped} malformed input lines skipped")

    manifest = {
        "config": cfg.to_dict(),
        "overrides": cfg.overrides(),
        "corpus": {
            "events": index.n_events,
            "communities": index.n_communities,
            "users": index.n_users,
            "skipped": stats.skipped,
            "topic_source": scores.topic_source,
        },
        "rows": counts,
        "overall": agg.get("overall"),
        "warnings": warnings,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    marker.unlink()
    return manifest


# ---------------------------------------------------------------- report

def write_report(index: CommunityIndex, rows, out_dir,
                 horizon_months: int = 24, overrides: dict | None = None) -> dict:
    """Plot-ready tables + headline summary from characterized pairs.

    Emits report_gap_cohort.csv (mean gap by older-side creation year),
    report_monthly.csv (activity-ratio trajectories), and
    report_summary.json (headline aggregates, config overrides).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cohort = dynamics.gap_by_cohort(index, rows)
    _write_csv(out / "report_gap_cohort.csv", ["year", "mean_gap_days"],
               sorted(cohort.items()))
    write_monthly_csv(index, rows, out / "report_monthly.csv", horizon_months)

    overtakes = 0
    uses: dict[str, int] = {}
    for r in rows:
        series = dynamics.monthly_ratio_series(index, r.base, r.modified,
                                               horizon_months)
        overtakes += dynamics.ever_overtakes(series)
        uses[r.base] = uses.get(r.base, 0) + 1
        uses[r.modified] = uses.get(r.modified, 0) + 1
    summary = {
        "summary": dynamics.gap_summary(rows),
        "category_counts": dynamics.category_counts(rows),
        "category_early_fractions": dynamics.category_early_fractions(rows),
        "overtake_share": overtakes / len(rows) if rows else None,
        # names in more than one pair: affix chains (x / anti-x / anti-anti-x)
        # or one base with several modifications
        "chained_names": sorted(n for n, c in uses.items() if c > 1),
        "overrides": overrides or {},
    }
    with open(out / "report_summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
