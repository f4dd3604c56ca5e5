"""Matched-control comparison of explorers and nonexplorers.

For a spinoff pair (older, newer): an explorer is a user of the older
community whose first action in the newer one happens at time t with at
least `min_pre` older-community actions in [t-w, t). Each explorer is
matched, without replacement, to a nonexplorer — a user who never touches
the newer community — anchored at their own action time t' nearest t
(within +-`match_hours`), requiring the pre-activity difference to stay
under `tolerance` of the explorer's count. The exploration effect is the
difference in the fraction of users whose activity increased (more
actions in [anchor, anchor+w) than in [anchor-w, anchor)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import CommunityIndex
from .errors import ConfigurationError

DAY = 86400
HOUR = 3600


@dataclass(frozen=True, slots=True)
class ExploreParams:
    window_days: int = 30
    match_hours: int = 24
    min_pre: int = 5
    tolerance: float = 0.05
    min_k: int = 100
    resamples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.window_days < 1:
            raise ConfigurationError(f"window_days must be >= 1, got {self.window_days}")
        if self.match_hours < 1:
            raise ConfigurationError(f"match_hours must be >= 1, got {self.match_hours}")
        if self.min_pre < 1:
            raise ConfigurationError(f"min_pre must be >= 1, got {self.min_pre}")
        if not 0.0 <= self.tolerance <= 1.0:
            raise ConfigurationError(f"tolerance must be in [0, 1], got {self.tolerance}")
        if self.min_k < 1:
            raise ConfigurationError(f"min_k must be >= 1, got {self.min_k}")
        if self.resamples < 1:
            raise ConfigurationError(f"resamples must be >= 1, got {self.resamples}")
        if self.seed < 0:
            raise ConfigurationError(f"seed must be >= 0, got {self.seed}")


@dataclass
class PairExperiment:
    """Matched-sample outcome for one (older, newer) pair."""
    older: str
    newer: str
    k: int
    p_e: float
    p_ne: float
    effect: float
    ci_lo: float
    ci_hi: float
    n_explorers: int
    pre_e: np.ndarray = field(repr=False)
    post_e: np.ndarray = field(repr=False)
    pre_ne: np.ndarray = field(repr=False)
    post_ne: np.ndarray = field(repr=False)

    @property
    def pair(self) -> str:
        return f"{self.older}/{self.newer}"


@dataclass(frozen=True, slots=True)
class DroppedPair:
    older: str
    newer: str
    k: int
    reason: str

    @property
    def pair(self) -> str:
        return f"{self.older}/{self.newer}"


def find_explorers(index: CommunityIndex, older: str, newer: str,
                   params: ExploreParams):
    """(uids, t, pre) of qualifying explorers, ascending (t, uid).

    t is the user's first action in `newer`; right-censored so the post
    window fits inside the corpus; pre counts actions in `older` over
    [t-w, t).
    """
    uids, t_first = index.first_actions(newer)
    w = params.window_days * DAY
    keep = t_first + w <= index.corpus_end
    uids, t_first = uids[keep], t_first[keep]
    ocid = index.community_id(older)
    cids = np.full(len(uids), ocid, dtype=np.int64)
    pre = index.pair_window_counts(uids, cids, t_first - w, t_first)
    active = pre >= params.min_pre
    return uids[active], t_first[active], pre[active]


def sample_controls(index: CommunityIndex, older: str, newer: str,
                    e_uids: np.ndarray, e_t: np.ndarray, e_pre: np.ndarray,
                    params: ExploreParams):
    """Match each explorer to a distinct nonexplorer.

    Returns (matched_idx, c_uids, c_t, c_pre): positions into the explorer
    arrays that found a match, and the matched control's user id, anchor
    time, and pre count. Matching runs in explorer order (ascending t)
    without replacement; candidate choice minimizes |pre difference|, then
    |t'-t|, then user id.
    """
    ocid = index.community_id(older)
    ncid = index.community_id(newer)
    lo, hi = index.community_slice(ocid)
    ts_o = index.ev_ts[lo:hi]
    uid_o = index.ev_uid[lo:hi]
    nlo, nhi = index.community_slice(ncid)
    newer_users = np.unique(index.ev_uid[nlo:nhi])
    loyal_event = ~np.isin(uid_o, newer_users)

    D = params.match_hours * HOUR
    w = params.window_days * DAY
    used = np.zeros(index.n_users, dtype=bool)
    matched_idx: list[int] = []
    c_uids: list[int] = []
    c_t: list[int] = []
    c_pre: list[int] = []

    for i in range(len(e_uids)):
        t = int(e_t[i])
        a = int(np.searchsorted(ts_o, t - D, "left"))
        b = int(np.searchsorted(ts_o, t + D, "right"))
        ok = loyal_event[a:b] & ~used[uid_o[a:b]]
        cu = uid_o[a:b][ok]
        if not len(cu):
            continue
        ct = ts_o[a:b][ok]
        dist = np.abs(ct - t)
        # per candidate user: anchor at the action closest to t, earlier on ties
        order = np.lexsort((ct, dist, cu))
        su = cu[order]
        first = np.ones(len(su), dtype=bool)
        first[1:] = su[1:] != su[:-1]
        cand_uid = su[first]
        cand_t = ct[order][first]
        cand_dist = dist[order][first]

        pre_ne = index.pair_window_counts(
            cand_uid, np.full(len(cand_uid), ocid, dtype=np.int64),
            cand_t - w, cand_t)
        diff = np.abs(pre_ne - e_pre[i])
        pass_tol = diff < params.tolerance * e_pre[i]
        if not pass_tol.any():
            continue
        pick_order = np.lexsort((cand_uid[pass_tol], cand_dist[pass_tol],
                                 diff[pass_tol]))
        best = int(np.flatnonzero(pass_tol)[pick_order[0]])
        used[cand_uid[best]] = True
        matched_idx.append(i)
        c_uids.append(int(cand_uid[best]))
        c_t.append(int(cand_t[best]))
        c_pre.append(int(pre_ne[best]))

    return (np.array(matched_idx, dtype=np.int64),
            np.array(c_uids, dtype=np.int64),
            np.array(c_t, dtype=np.int64),
            np.array(c_pre, dtype=np.int64))


@dataclass(frozen=True, slots=True)
class MatchedPair:
    """One explorer/control match, by user id (see index.user_names)."""
    explorer: int
    control: int
    t_e: int
    t_ne: int
    pre_e: int
    pre_ne: int


def matched_pairs(index: CommunityIndex, older: str, newer: str,
                  params: ExploreParams | None = None
                  ) -> tuple[list[MatchedPair], np.ndarray]:
    """Explicit match records for auditing, plus unmatched explorer uids."""
    if params is None:
        params = ExploreParams()
    e_uids, e_t, e_pre = find_explorers(index, older, newer, params)
    m_idx, c_uids, c_t, c_pre = sample_controls(index, older, newer,
                                                e_uids, e_t, e_pre, params)
    matches = [
        MatchedPair(int(e_uids[i]), int(c_uids[j]), int(e_t[i]),
                    int(c_t[j]), int(e_pre[i]), int(c_pre[j]))
        for j, i in enumerate(m_idx)
    ]
    unmatched = np.delete(e_uids, m_idx)
    return matches, unmatched


def exploration_effect(index: CommunityIndex, older: str, newer: str,
                       params: ExploreParams | None = None):
    """Run the matched experiment for one pair.

    Returns PairExperiment, or DroppedPair when fewer than `min_k`
    explorers could be matched.
    """
    if params is None:
        params = ExploreParams()
    e_uids, e_t, e_pre = find_explorers(index, older, newer, params)
    m_idx, c_uids, c_t, c_pre = sample_controls(index, older, newer,
                                                e_uids, e_t, e_pre, params)
    k = len(m_idx)
    if k < params.min_k:
        return DroppedPair(older, newer, k,
                           f"matched {k} pairs, need {params.min_k}")

    w = params.window_days * DAY
    ocid = index.community_id(older)
    me_uids = e_uids[m_idx]
    me_t = e_t[m_idx]
    pre_e = e_pre[m_idx].astype(np.int64)
    post_e = index.pair_window_counts(
        me_uids, np.full(k, ocid, dtype=np.int64), me_t, me_t + w)
    post_ne = index.pair_window_counts(
        c_uids, np.full(k, ocid, dtype=np.int64), c_t, c_t + w)

    inc_e = (post_e > pre_e).astype(np.float64)
    inc_ne = (post_ne > c_pre).astype(np.float64)
    p_e = float(inc_e.mean())
    p_ne = float(inc_ne.mean())

    ncid = index.community_id(newer)
    rng = np.random.default_rng(np.random.SeedSequence([params.seed, ocid, ncid]))
    draws = rng.integers(0, k, size=(params.resamples, k))
    deltas = inc_e[draws].mean(axis=1) - inc_ne[draws].mean(axis=1)
    ci_lo, ci_hi = np.percentile(deltas, [2.5, 97.5])

    return PairExperiment(
        older=older, newer=newer, k=k,
        p_e=p_e, p_ne=p_ne, effect=p_e - p_ne,
        ci_lo=float(ci_lo), ci_hi=float(ci_hi),
        n_explorers=len(e_uids),
        pre_e=pre_e, post_e=post_e,
        pre_ne=c_pre, post_ne=post_ne,
    )


def quartile_rows(exp: PairExperiment) -> list[dict]:
    """Per-quartile p_e/p_ne, splitting matched pairs by explorer pre count.

    Quartile cut j is the ceil(j*k/4)-th smallest pre count; a value equal
    to a cut falls in the lower quartile. Empty quartiles (heavy ties)
    produce n=0 rows with no proportions.
    """
    k = exp.k
    srt = np.sort(exp.pre_e)
    cuts = [int(srt[-(-j * k // 4) - 1]) for j in (1, 2, 3)]
    bins = np.ones(k, dtype=np.int64)
    for c in cuts:
        bins += exp.pre_e > c
    inc_e = exp.post_e > exp.pre_e
    inc_ne = exp.post_ne > exp.pre_ne
    rows = []
    for q in (1, 2, 3, 4):
        sel = bins == q
        n = int(sel.sum())
        rows.append({
            "pair": exp.pair,
            "quartile": q,
            "p_e": float(inc_e[sel].mean()) if n else None,
            "p_ne": float(inc_ne[sel].mean()) if n else None,
            "n": n,
        })
    return rows


@dataclass
class ExperimentResult:
    experiments: list[PairExperiment]
    dropped: list[DroppedPair]
    quartiles: list[dict]


def run_experiment(index: CommunityIndex, pairs: Iterable[tuple[str, str]],
                   params: ExploreParams | None = None) -> ExperimentResult:
    """Run the matched experiment for each (older, newer) pair."""
    if params is None:
        params = ExploreParams()
    experiments, dropped, quartiles = [], [], []
    for older, newer in pairs:
        res = exploration_effect(index, older, newer, params)
        if isinstance(res, DroppedPair):
            dropped.append(res)
        else:
            experiments.append(res)
            quartiles.extend(quartile_rows(res))
    return ExperimentResult(experiments, dropped, quartiles)


def aggregate_effects(experiments: Sequence[PairExperiment],
                      categories: dict[str, str] | None = None,
                      min_pairs: int = 4) -> dict:
    """Macro-averages across pairs, overall and per category.

    `categories` maps "older/newer" to a category name. Category averages
    with fewer than `min_pairs` pairs are reported with effect=None.
    """
    out: dict = {"overall": None, "by_category": {}}
    if experiments:
        out["overall"] = {
            "n_pairs": len(experiments),
            "p_e": float(np.mean([e.p_e for e in experiments])),
            "p_ne": float(np.mean([e.p_ne for e in experiments])),
            "effect": float(np.mean([e.effect for e in experiments])),
        }
    if categories:
        by_cat: dict[str, list[PairExperiment]] = {}
        for e in experiments:
            cat = categories.get(e.pair)
            if cat is not None:
                by_cat.setdefault(cat, []).append(e)
        for cat in sorted(by_cat):
            exps = by_cat[cat]
            entry = {"n_pairs": len(exps)}
            if len(exps) >= min_pairs:
                entry["p_e"] = float(np.mean([e.p_e for e in exps]))
                entry["p_ne"] = float(np.mean([e.p_ne for e in exps]))
                entry["effect"] = float(np.mean([e.effect for e in exps]))
            else:
                entry["p_e"] = entry["p_ne"] = entry["effect"] = None
            out["by_category"][cat] = entry
    return out
