"""Pair dynamics: creation order, relative activity, early membership.

All windows are half-open [a, b) in integer seconds. "Creation" of a
community means its first observed event; activity comparisons only look
at time ranges where both communities exist, so the newer community's
creation time anchors every ratio.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from math import log
from typing import Iterable, Sequence

import numpy as np

from .affix import Taxonomy
from .corpus import CommunityIndex
from .errors import ConfigurationError
from .similarity import PairScore

DAY = 86400
MONTH = 30 * DAY


@dataclass(frozen=True, slots=True)
class TemporalOrder:
    older: str
    newer: str
    gap_days: float
    modified_is_newer: bool


def temporal_order(index: CommunityIndex, base: str, modified: str) -> TemporalOrder:
    """Which side came first, by first observed event; ties keep `base` as
    the older side and count `modified` as not-newer."""
    tb = index.first_event_time(base)
    tm = index.first_event_time(modified)
    if tm > tb:
        return TemporalOrder(base, modified, (tm - tb) / DAY, True)
    return TemporalOrder(modified, base, (tb - tm) / DAY, False)


def _count_from(index: CommunityIndex, name: str, t0: int) -> int:
    lo, hi = index.community_slice(name)
    ts = index.ev_ts[lo:hi]
    return int(len(ts) - np.searchsorted(ts, t0, "left"))


def activity_log_ratio(index: CommunityIndex, base: str, modified: str) -> float:
    """ln((A_newer + 1) / (A_older + 1)) with both counts restricted to
    events at or after the newer community's creation."""
    order = temporal_order(index, base, modified)
    t0 = index.first_event_time(order.newer)
    a_newer = _count_from(index, order.newer, t0)
    a_older = _count_from(index, order.older, t0)
    return log((a_newer + 1) / (a_older + 1))


def monthly_ratio_series(index: CommunityIndex, base: str, modified: str,
                         horizon_months: int = 24) -> np.ndarray:
    """Per-30-day-bin ln((newer+1)/(older+1)) from the newer creation.

    Bins that have started by the last corpus event are included (the
    final one may be partial); the series is capped at `horizon_months`.
    """
    if horizon_months < 1:
        raise ConfigurationError(f"horizon_months must be >= 1, got {horizon_months}")
    order = temporal_order(index, base, modified)
    t0 = index.first_event_time(order.newer)
    n_bins = min(horizon_months, (index.corpus_end - t0) // MONTH + 1)
    edges = t0 + MONTH * np.arange(n_bins + 1, dtype=np.int64)

    def bin_counts(name):
        lo, hi = index.community_slice(name)
        return np.diff(np.searchsorted(index.ev_ts[lo:hi], edges, "left"))

    return np.log((bin_counts(order.newer) + 1.0) / (bin_counts(order.older) + 1.0))


def ever_overtakes(series: np.ndarray) -> bool:
    """True when the newer side out-produces the older in any monthly bin."""
    return bool((np.asarray(series) > 0).any())


def early_participant_fraction(index: CommunityIndex, older: str, newer: str,
                               n_early: int = 100,
                               member_window_days: int = 30) -> float:
    """Fraction of the newer community's first `n_early` distinct users
    (ordered by first action, ties by user id) who acted in the older
    community during the `member_window_days` before their own arrival."""
    uids, first_ts = index.first_actions(newer)
    take = min(n_early, len(uids))
    uids = uids[:take]
    first_ts = first_ts[:take]
    ocid = index.community_id(older)
    cids = np.full(take, ocid, dtype=np.int64)
    w = member_window_days * DAY
    counts = index.pair_window_counts(uids, cids, first_ts - w, first_ts)
    return float((counts > 0).mean()) if take else 0.0


@dataclass(frozen=True, slots=True)
class SpinoffRow:
    """Characterization of one related affix pair."""
    base: str
    modified: str
    affix: str
    position: str
    older: str
    newer: str
    gap_days: float
    modified_is_newer: bool
    log_ratio: float
    early_frac: float
    spinoff: bool
    category: str


def classify_spinoffs(index: CommunityIndex, scores: Iterable[PairScore],
                      taxonomy: Taxonomy | None = None, *,
                      early_threshold: float = 0.10, n_early: int = 100,
                      member_window_days: int = 30) -> list[SpinoffRow]:
    """Characterize pairs and call spinoffs.

    A pair is a spinoff when the modified community is the newer one and
    strictly more than `early_threshold` of its earliest participants came
    from the older side.
    """
    if taxonomy is None:
        taxonomy = Taxonomy.load()
    rows = []
    for s in scores:
        order = temporal_order(index, s.base, s.modified)
        frac = early_participant_fraction(index, order.older, order.newer,
                                          n_early, member_window_days)
        rows.append(SpinoffRow(
            base=s.base,
            modified=s.modified,
            affix=s.affix,
            position=s.position,
            older=order.older,
            newer=order.newer,
            gap_days=order.gap_days,
            modified_is_newer=order.modified_is_newer,
            log_ratio=activity_log_ratio(index, s.base, s.modified),
            early_frac=frac,
            spinoff=bool(frac > early_threshold and order.modified_is_newer),
            category=taxonomy.categorize(s.affix),
        ))
    return rows


def creation_year(ts: int) -> int:
    return datetime.fromtimestamp(ts, tz=timezone.utc).year


def gap_summary(rows: Sequence[SpinoffRow]) -> dict:
    """Headline numbers over characterized pairs."""
    if not rows:
        return {"n_pairs": 0}
    gaps = np.array([r.gap_days for r in rows])
    ratios = np.array([r.log_ratio for r in rows])
    newer = np.array([r.modified_is_newer for r in rows])
    return {
        "n_pairs": len(rows),
        "mean_gap_days": float(gaps.mean()),
        "median_gap_days": float(np.median(gaps)),
        "share_modified_newer": float(newer.mean()),
        "mean_log_ratio": float(ratios.mean()),
        "mean_activity_share": float(np.exp(ratios.mean())),
        "n_spinoffs": sum(r.spinoff for r in rows),
    }


def category_counts(rows: Sequence[SpinoffRow]) -> dict[str, int]:
    out: dict[str, int] = {}
    for r in rows:
        out[r.category] = out.get(r.category, 0) + 1
    return dict(sorted(out.items(), key=lambda kv: (-kv[1], kv[0])))


def category_early_fractions(rows: Sequence[SpinoffRow]) -> dict[str, float]:
    """Mean early-participant fraction per affix category."""
    sums: dict[str, list] = {}
    for r in rows:
        sums.setdefault(r.category, []).append(r.early_frac)
    return {cat: float(np.mean(v)) for cat, v in sorted(sums.items())}


def gap_by_cohort(index: CommunityIndex,
                  rows: Sequence[SpinoffRow]) -> dict[int, float]:
    """Mean creation gap keyed by the older community's creation year (UTC)."""
    sums: dict[int, list] = {}
    for r in rows:
        year = creation_year(index.first_event_time(r.older))
        sums.setdefault(year, []).append(r.gap_days)
    return {y: float(np.mean(v)) for y, v in sorted(sums.items())}
