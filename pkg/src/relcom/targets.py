"""Reference targets from a full-scale Reddit run of this analysis.

The headline numbers below were measured on a full Reddit dump (posts
2006 through February 2014, comments through November 2014; 5,692
communities clear the 300-poster bar). They are nowhere near reachable
from desk-scale test corpora, so they are encoded here as documented
targets: run the pipeline on such a dump, feed the resulting bundle to
`measure_bundle`, and `compare` reports how each statistic lines up.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import pipeline
from .affix import affix_stats

DATASET = {
    "communities": 5_692,
    "posts": 88_000_000,
    "comments": 887_500_000,
}

# 10 most common affixes by number of detected pairs.
TOP_AFFIX_PAIR_COUNTS = [
    ("s", 63), ("porn", 26), ("circlejerk", 23), ("ask", 21),
    ("shitty", 17), ("music", 17), ("help", 11), ("2", 9),
    ("true", 9), ("learn", 9),
]

# Pair counts per taxonomy category at the extremes, plus one in-category
# contrast (both affixes are "medium", yet porn >> pics).
CATEGORY_PAIR_COUNTS = {"medium": 88, "modifier": 12}
MEDIUM_CONTRAST = {"porn": 33, "pics": 7}

# Headline statistics; values in the measured dict use the same keys.
HEADLINE = {
    # mean creation gap across pairs, in days
    "mean_gap_days": 749.0,
    # share of pairs where the modified community is the newer one
    "share_modified_newer": 0.86,
    # share of affixes with at least one modified-created-first example
    "affix_counterexample_share": 0.33,
    # mean ln((newer+1)/(older+1)) activity ratio after newer creation
    "mean_log_ratio": -2.0,
    # exp(mean_log_ratio): newer community's typical relative activity
    "mean_activity_share": 0.135,
    # share of pairs where the newer side out-produces the older in
    # at least one 30-day bin
    "overtake_share": 0.257,
}

# Early-participant fraction extremes among affixes.
EARLY_FRACTION_EXTREMES = {"meta": 0.658, "ex": 0.01}

# Categories that lean toward one affix position.
SUFFIX_LEANING = ("generation", "medium", "modifier")
PREFIX_LEANING = ("genre", "derivative", "place")


def reference_targets() -> dict:
    """Everything above in one serializable dict."""
    return {
        "dataset": dict(DATASET),
        "top_affix_pair_counts": list(TOP_AFFIX_PAIR_COUNTS),
        "category_pair_counts": dict(CATEGORY_PAIR_COUNTS),
        "medium_contrast": dict(MEDIUM_CONTRAST),
        "headline": dict(HEADLINE),
        "early_fraction_extremes": dict(EARLY_FRACTION_EXTREMES),
        "suffix_leaning": list(SUFFIX_LEANING),
        "prefix_leaning": list(PREFIX_LEANING),
    }


@dataclass(frozen=True, slots=True)
class TargetCheck:
    name: str
    expected: float
    actual: float | None
    rel_tol: float

    @property
    def ok(self) -> bool | None:
        if self.actual is None:
            return None
        scale = max(abs(self.expected), 1e-12)
        return abs(self.actual - self.expected) <= self.rel_tol * scale


def compare(measured: dict, rel_tol: float = 0.05) -> list[TargetCheck]:
    """Line up measured headline values against the reference targets.

    `measured` maps HEADLINE keys to values; missing keys yield checks
    with actual=None (ok=None) so partial runs stay visible.
    """
    return [TargetCheck(name, expected, measured.get(name), rel_tol)
            for name, expected in HEADLINE.items()]


def measure_bundle(bundle_dir) -> dict:
    """Pull the measurable headline values out of a finished bundle.

    Needs report_summary.json (written by `relcom report`) and pairs.csv;
    statistics that the bundle cannot answer are simply absent.
    """
    out: dict = {}
    d = Path(bundle_dir)
    rpt = d / "report_summary.json"
    if rpt.exists():
        with open(rpt, "r", encoding="utf-8") as fh:
            summary = json.load(fh)
        head = summary.get("summary", {})
        for key in ("mean_gap_days", "share_modified_newer",
                    "mean_log_ratio", "mean_activity_share"):
            if key in head:
                out[key] = head[key]
        if summary.get("overtake_share") is not None:
            out["overtake_share"] = summary["overtake_share"]
    pairs_csv = d / "pairs.csv"
    if pairs_csv.exists():
        stats = affix_stats(pipeline.read_pairs_csv(pairs_csv))
        out["top_affix_pair_counts"] = [
            (a, c) for a, _pos, c in stats["by_affix"][:10]]
        out["suffix_fraction"] = stats["suffix_fraction"]
    return out
