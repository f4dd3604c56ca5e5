"""Synthetic corpora with planted, independently recounted ground truth.

The generator lays out events so every analysis stage has a knowable
answer: affix pairs that must be detected, link/topic structure that must
cross (or miss) the relatedness threshold, early-participant fractions
and creation gaps for spinoff calls, and an explorer/control layout whose
matched sampling is exact by construction.

The control layout is the delicate part. Explorer first-touch times sit
on a regular grid t_i = T0 + i*S with S wider than twice the match window, so
the +-24h candidate windows never overlap. Each planted control's anchor
action sits 1h after its explorer's t_i (the only loyal event inside that
window), and all other control events live in the 2h "gaps" between
consecutive windows, so controls are never candidates for the wrong
explorer. Every other user in the corpus has too few pre-window actions
to pass the matching tolerance, which forces the sampler to recover
exactly the planted pairs.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable

import numpy as np

from .affix import detect_pairs
from .corpus import (CommunityIndex, EventRecord, build_index,
                     normalize_community, normalize_url)
from .errors import ConfigurationError

DAY = 86400
HOUR = 3600

# event tuples: (user, community, ts, kind, url, text)
Event = tuple

PAIR_KINDS = ("spinoff", "related", "unrelated")


@dataclass
class PairPlan:
    """One planted affix pair and everything that should be true of it."""
    base: str
    modified: str
    kind: str = "spinoff"
    gap_days: float = 400.0
    early_frac: float = 0.30
    modified_is_newer: bool = True
    k: int = 120
    q_e: float = 0.60
    q_ne: float = 0.45
    pre_low: int = 5
    pre_high: int = 18
    own_links: int = 10
    shared_links: int = 30

    def validate(self) -> None:
        base = normalize_community(self.base)
        modified = normalize_community(self.modified)
        if base == modified:
            raise ConfigurationError(f"pair has equal names: {base!r}")
        if not (modified.startswith(base) or modified.endswith(base)):
            raise ConfigurationError(
                f"{modified!r} does not extend {base!r} with an affix")
        if self.kind not in PAIR_KINDS:
            raise ConfigurationError(f"unknown pair kind {self.kind!r}")
        if self.gap_days < 2:
            raise ConfigurationError("gap_days must be >= 2 for a clean layout")
        if not 0.0 <= self.early_frac <= 1.0:
            raise ConfigurationError("early_frac must be in [0, 1]")
        if self.kind == "spinoff":
            if not self.modified_is_newer:
                raise ConfigurationError("a spinoff plan needs modified_is_newer")
            if not self.early_frac > 0.10:
                raise ConfigurationError(
                    "a spinoff plan needs early_frac > 0.10 to be called one")
            if self.k < 1:
                raise ConfigurationError("k must be >= 1")
            if not (0.0 <= self.q_e <= 1.0 and 0.0 <= self.q_ne <= 1.0):
                raise ConfigurationError("q_e/q_ne must be in [0, 1]")
            if not 5 <= self.pre_low <= self.pre_high <= 20:
                # pre <= 20 makes the 5% matching tolerance demand an exact
                # pre-count match, which is what locks in the planted controls
                raise ConfigurationError("need 5 <= pre_low <= pre_high <= 20")
        if self.kind == "unrelated" and self.shared_links:
            self.shared_links = 0

    @property
    def older(self) -> str:
        return self.base if self.modified_is_newer else self.modified

    @property
    def newer(self) -> str:
        return self.modified if self.modified_is_newer else self.base

    @property
    def affix_info(self) -> tuple[str, str]:
        """(affix, position), suffix reading preferred like detection."""
        if self.modified.startswith(self.base):
            return self.modified[len(self.base):], "suffix"
        return self.modified[: len(self.modified) - len(self.base)], "prefix"

    @property
    def expect_spinoff(self) -> bool:
        return self.modified_is_newer and self.early_frac > 0.10


def _default_pairs() -> list[PairPlan]:
    return [
        PairPlan("atoms", "askatoms", kind="spinoff", gap_days=420,
                 early_frac=0.32, k=120, q_e=0.60, q_ne=0.45),
        PairPlan("craft", "truecraft", kind="spinoff", gap_days=260,
                 early_frac=0.50, k=110, q_e=0.40, q_ne=0.52),
        PairPlan("melody", "melodys", kind="related", gap_days=150,
                 early_frac=0.04),
        PairPlan("orchid", "orchidlol", kind="related", gap_days=90,
                 early_frac=0.40, modified_is_newer=False),
        PairPlan("quartz", "quartzporn", kind="unrelated", gap_days=300,
                 early_frac=0.0),
    ]


@dataclass
class SynthConfig:
    seed: int = 7
    start_ts: int = 1_000_000_000
    mode: str = "deterministic"  # or "stochastic" (increase draws only)
    background: int = 8
    bulk_posters: int = 310
    early_pool: int = 100
    window_days: int = 30
    spacing_hours: int = 50
    pairs: list[PairPlan] = field(default_factory=_default_pairs)

    def validate(self) -> None:
        if self.mode not in ("deterministic", "stochastic"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.seed < 0:
            raise ConfigurationError("seed must be >= 0")
        if self.background < 2:
            raise ConfigurationError("need at least 2 background communities")
        if self.bulk_posters < 1:
            raise ConfigurationError("bulk_posters must be >= 1")
        if self.early_pool < 1:
            raise ConfigurationError("early_pool must be >= 1")
        if self.window_days < 1:
            raise ConfigurationError("window_days must be >= 1")
        if self.spacing_hours < 50:
            raise ConfigurationError(
                "spacing_hours must be >= 50 so candidate windows stay disjoint")
        names = []
        for p in self.pairs:
            p.base = normalize_community(p.base)
            p.modified = normalize_community(p.modified)
            p.validate()
            names.extend((p.base, p.modified))
        names.extend(self.background_names())
        if len(names) != len(set(names)):
            raise ConfigurationError("community names must be distinct")
        planted = {(p.base, p.modified) for p in self.pairs}
        detected = {(d.base, d.modified) for d in detect_pairs(names)}
        if planted != detected:
            extra = detected - planted
            missing = planted - detected
            raise ConfigurationError(
                "community names create accidental affix pairs: "
                f"unexpected={sorted(extra)} missing={sorted(missing)}")

    def background_names(self) -> list[str]:
        return [f"bg{j:06d}" for j in range(self.background)]

    @classmethod
    def from_dict(cls, raw: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        bad = set(raw) - known
        if bad:
            raise ConfigurationError(f"unknown config keys: {sorted(bad)}")
        kwargs = dict(raw)
        if "pairs" in kwargs:
            pair_fields = {f.name for f in fields(PairPlan)}
            plans = []
            for p in kwargs["pairs"]:
                badp = set(p) - pair_fields
                if badp:
                    raise ConfigurationError(f"unknown pair keys: {sorted(badp)}")
                plans.append(PairPlan(**p))
            kwargs["pairs"] = plans
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "SynthConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except ValueError as exc:
                raise ConfigurationError(f"{path}: bad JSON ({exc})") from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        d = asdict(self)
        return d


class _Emitter:
    def __init__(self):
        self.events: list[Event] = []

    def add(self, user, comm, ts, kind="post", url=None, text=None):
        self.events.append((user, comm, int(ts), kind, url, text))


def _emit_community_bulk(em: _Emitter, cfg: SynthConfig, name: str, t0: int,
                         own_links: int, shared: tuple[str, int] | None,
                         tokens: list[str]) -> None:
    """Baseline population: each bulk user posts exactly once.

    Single-event users can never hold the >=5 pre-window actions a control
    needs, so bulk posts are harmless wherever they land in time.
    """
    for b in range(cfg.bulk_posters):
        ts = t0 + b * 3601
        url = None
        if b < own_links:
            url = f"http://own-{name}.example/{b}"
        elif shared is not None and b < own_links + shared[1]:
            url = f"http://sh-{shared[0]}.example/{b - own_links}"
        text = " ".join(tokens[(b + j) % len(tokens)] for j in range(3))
        em.add(f"b_{name}_{b:05d}", name, ts, "post", url, text)
    # a couple of comments for kind variety; still single-event users
    for x in range(3):
        em.add(f"x_{name}_{x}", name, t0 + 1800 + x * 7207, "comment",
               None, tokens[x % len(tokens)])


def _increase_flags(n: int, q: float, mode: str, rng) -> np.ndarray:
    if mode == "deterministic":
        inc = int(round(q * n))
        flags = np.zeros(n, dtype=bool)
        flags[:inc] = True
        return flags
    return rng.random(n) < q


def generate(cfg: SynthConfig) -> tuple[list[Event], dict]:
    """Build the event list and the ground-truth manifest dict."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    em = _Emitter()
    w = cfg.window_days * DAY
    S = cfg.spacing_hours * HOUR
    t_origin = cfg.start_ts
    sentinel_after = t_origin

    explore_truth = []
    for p in cfg.pairs:
        older, newer = p.older, p.newer
        t_old = t_origin
        t_new = t_origin + int(p.gap_days * DAY)

        own_tokens = {
            older: [f"w_{older}_{t}" for t in range(8)],
            newer: [f"w_{newer}_{t}" for t in range(8)],
        }
        if p.kind in ("spinoff", "related"):
            shared_tokens = [f"sh_{p.base}_{t}" for t in range(8)]
            tok_old = tok_new = shared_tokens
            shared = (p.base, p.shared_links)
        else:
            tok_old, tok_new = own_tokens[older], own_tokens[newer]
            shared = None

        _emit_community_bulk(em, cfg, older, t_old, p.own_links, shared, tok_old)
        _emit_community_bulk(em, cfg, newer, t_new + DAY, p.own_links, shared,
                             tok_new)

        # early participants: a prologue of distinct users opens the newer
        # community; the first round(frac * pool) of them acted in the older
        # community an hour before arriving
        n_members = int(round(p.early_frac * cfg.early_pool))
        for i in range(cfg.early_pool):
            arrive = t_new + i * 60
            user = f"p_{p.base}_{i:04d}"
            if i < n_members:
                em.add(user, older, arrive - HOUR, "post")
            em.add(user, newer, arrive, "post")

        if p.kind != "spinoff":
            sentinel_after = max(sentinel_after, t_new + DAY
                                 + cfg.bulk_posters * 3601)
            continue

        # explorer/control grid
        T0 = t_new + 2 * DAY + cfg.early_pool * 60
        k = p.k
        pres = np.array([p.pre_low + (i % (p.pre_high - p.pre_low + 1))
                         for i in range(k)], dtype=np.int64)
        inc_e = _increase_flags(k, p.q_e, cfg.mode, rng)
        inc_ne = _increase_flags(k, p.q_ne, cfg.mode, rng)

        for i in range(k):
            t = T0 + i * S
            e_user = f"e_{p.base}_{i:04d}"
            c_user = f"c_{p.base}_{i:04d}"
            em.add(e_user, newer, t, "post")  # first touch of the newer side
            pre = int(pres[i])
            for j in range(pre):
                em.add(e_user, older, t - 60 * (j + 1), "post")
            post_e = pre + 1 if inc_e[i] else pre - 1
            for j in range(post_e):
                em.add(e_user, older, t + 60 * (j + 1), "post")

            t2 = t + HOUR  # control anchor: only loyal event in the window
            em.add(c_user, older, t2, "post")
            for j in range(pre):  # pre events in the gaps between windows
                d = 1 + j // 2
                em.add(c_user, older, t - d * S + 25 * HOUR + (j % 2) * 120,
                       "post")
            post_ne = pre + 1 if inc_ne[i] else pre - 1
            for j in range(post_ne - 1):  # anchor already counts once
                d = 1 + j // 2
                em.add(c_user, older, t + d * S + 25 * HOUR + (j % 2) * 120,
                       "post")

        last_t = T0 + (k - 1) * S
        sentinel_after = max(sentinel_after, last_t + HOUR + w)
        p_e = float(inc_e.mean())
        p_ne = float(inc_ne.mean())
        explore_truth.append({
            "older": older, "newer": newer, "pair": f"{older}/{newer}",
            "k": k, "q_e": p.q_e, "q_ne": p.q_ne,
            "configured_effect": p.q_e - p.q_ne,
            "realized_p_e": p_e, "realized_p_ne": p_ne,
            "realized_effect": p_e - p_ne,
            "pre_low": p.pre_low, "pre_high": p.pre_high,
        })

    for j, name in enumerate(cfg.background_names()):
        tokens = [f"w_{name}_{t}" for t in range(8)]
        _emit_community_bulk(em, cfg, name, t_origin + j * 977, 10, None,
                             tokens)

    # push the corpus end past every post window so nothing is censored
    em.add("zz_sentinel", cfg.background_names()[0],
           sentinel_after + 2 * DAY, "post")

    events = sorted(em.events, key=lambda e: (e[2], e[0], e[1], e[3]))
    truth = _build_truth(cfg, events, explore_truth)
    return events, truth


def _build_truth(cfg: SynthConfig, events: list[Event],
                 explore_truth: list[dict]) -> dict:
    """Recount planted facts directly from the raw events (plain Python,
    independent of the analysis implementation)."""
    by_comm: dict[str, list[Event]] = {}
    for ev in events:
        by_comm.setdefault(ev[1], []).append(ev)
    first_ts = {c: min(e[2] for e in evs) for c, evs in by_comm.items()}
    posters = {c: len({e[0] for e in evs if e[3] == "post"})
               for c, evs in by_comm.items()}

    pair_rows = []
    for p in cfg.pairs:
        older, newer = p.older, p.newer
        t_new = first_ts[newer]
        a_newer = sum(1 for e in by_comm[newer] if e[2] >= t_new)
        a_older = sum(1 for e in by_comm[older] if e[2] >= t_new)
        gap = (t_new - first_ts[older]) / DAY

        arrivals: dict[str, int] = {}
        for e in sorted(by_comm[newer], key=lambda e: (e[2], e[0])):
            arrivals.setdefault(e[0], e[2])
        early = sorted(arrivals.items(), key=lambda kv: (kv[1], kv[0]))
        early = early[: cfg.early_pool]
        older_by_user: dict[str, list[int]] = {}
        for e in by_comm[older]:
            older_by_user.setdefault(e[0], []).append(e[2])
        members = 0
        for user, arr in early:
            lo = arr - 30 * DAY
            if any(lo <= t < arr for t in older_by_user.get(user, ())):
                members += 1
        early_frac = members / len(early)

        affix, position = p.affix_info
        spinoff = p.modified_is_newer and early_frac > 0.10
        if p.kind == "spinoff" and not spinoff:
            raise ConfigurationError(
                f"{older}/{newer}: realized early fraction {early_frac} "
                "does not qualify as a spinoff; raise early_frac")
        pair_rows.append({
            "base": p.base, "modified": p.modified,
            "affix": affix, "position": position,
            "kind": p.kind,
            "related": p.kind in ("spinoff", "related"),
            "older": older, "newer": newer,
            "gap_days": gap,
            "modified_is_newer": p.modified_is_newer,
            "log_ratio": math.log((a_newer + 1) / (a_older + 1)),
            "early_frac": early_frac,
            "spinoff": spinoff,
        })
        planted = round(p.early_frac * cfg.early_pool) / cfg.early_pool
        if abs(early_frac - planted) > 1e-9:
            raise ConfigurationError(
                f"planted early fraction drifted for {older}/{newer}: "
                f"{early_frac} != {planted}")

    return {
        "generator": {"seed": cfg.seed, "mode": cfg.mode,
                      "config": cfg.to_dict()},
        "corpus": {
            "n_events": len(events),
            "n_communities": len(by_comm),
            "start": min(e[2] for e in events),
            "end": max(e[2] for e in events),
        },
        "communities": [
            {"name": c, "first_ts": first_ts[c], "posters": posters[c]}
            for c in sorted(by_comm)
        ],
        "pairs": pair_rows,
        "explore": explore_truth,
    }


def events_to_records(events: Iterable[Event]):
    for user, comm, ts, kind, url, text in events:
        yield EventRecord(
            user=user, community=normalize_community(comm), ts=ts, kind=kind,
            url=normalize_url(url) if url else None,
            tokens=tuple(text.lower().split()) if text else (),
        )


def index_from_events(events: Iterable[Event]) -> CommunityIndex:
    """In-memory corpus for tests and repeated experiment runs."""
    return build_index(events_to_records(events))


def write_jsonl(events: Iterable[Event], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for user, comm, ts, kind, url, text in events:
            obj = {"user": user, "community": comm, "ts": ts, "kind": kind}
            if url is not None:
                obj["url"] = url
            if text is not None:
                obj["text"] = text
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")


def write_manifest(truth: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")


def generate_files(cfg: SynthConfig, out_path, manifest_path) -> dict:
    events, truth = generate(cfg)
    write_jsonl(events, out_path)
    write_manifest(truth, manifest_path)
    return truth


def bulk_corpus(path, n_events: int = 10_000_000, n_communities: int = 50,
                n_users: int = 200_000, seed: int = 1,
                start_ts: int = 1_000_000_000) -> int:
    """Large plain corpus for throughput measurement (no planted structure).

    Returns the number of lines written."""
    if n_events < 1:
        raise ConfigurationError("n_events must be >= 1")
    rng = np.random.default_rng(seed)
    batch = 1 << 16
    written = 0
    with open(path, "w", encoding="utf-8") as fh:
        while written < n_events:
            m = min(batch, n_events - written)
            users = rng.integers(0, n_users, size=m)
            comms = rng.integers(0, n_communities, size=m)
            ts = start_ts + written + np.arange(m)
            kinds = rng.random(m) < 0.4
            with_url = rng.random(m) < 0.2
            with_text = rng.random(m) < 0.5
            urlq = rng.integers(0, 5000, size=m)
            tok = rng.integers(0, 900, size=(m, 3))
            lines = []
            for i in range(m):
                kind = "comment" if kinds[i] and not with_url[i] else "post"
                parts = [f'{{"user":"u{users[i]:07d}","community":"comm{comms[i]:03d}",'
                         f'"ts":{ts[i]},"kind":"{kind}"']
                if with_url[i]:
                    parts.append(f',"url":"http://h{urlq[i] % 97}.example/{urlq[i]}"')
                if with_text[i]:
                    parts.append(f',"text":"tk{tok[i,0]} tk{tok[i,1]} tk{tok[i,2]}"')
                parts.append("}")
                lines.append("".join(parts))
            fh.write("\n".join(lines) + "\n")
            written += m
    return written
