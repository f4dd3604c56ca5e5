"""Shared test utilities: tiny corpus builders and brute-force oracles."""

from __future__ import annotations

import numpy as np

from relcom import synth
from relcom.corpus import build_index


def ev(user, comm, ts, kind="post", url=None, text=None):
    return (user, comm, ts, kind, url, text)


def index_of(events):
    """Index a list of ev() tuples."""
    return build_index(synth.events_to_records(events))


def brute_affix_pairs(names):
    """O(n^2) oracle: every (base, modified, affix, position); the suffix
    reading wins when a pair admits both."""
    norm = sorted({n.lower() for n in names})
    out = {}
    for base in norm:
        for mod in norm:
            if mod == base or len(mod) <= len(base):
                continue
            if mod.startswith(base):
                out[(base, mod)] = (mod[len(base):], "suffix")
            elif mod.endswith(base):
                key = (base, mod)
                if key not in out:
                    out[key] = (mod[: len(mod) - len(base)], "prefix")
    return out


def midrank_percentile(background, v):
    """Sort-and-midrank oracle."""
    bg = sorted(background)
    below = sum(1 for x in bg if x < v)
    ties = sum(1 for x in bg if x == v)
    return 100.0 * (below + 0.5 * ties) / len(bg)


def brute_matched_pairs(events, older, newer, params):
    """Pure-Python reimplementation of explorer/control matching.

    Works on raw ev() tuples (urls/text-free), applying the same dedupe
    rule as the index. Returns (matches, unmatched_explorers) with user
    NAMES: matches are (explorer, control, t_e, t_ne, pre_e, pre_ne).
    """
    day, hour = 86400, 3600
    rows = sorted({(e[0], e[1].lower(), e[2], e[3]) for e in events})
    users = sorted({r[0] for r in rows})
    rank = {u: i for i, u in enumerate(users)}
    corpus_end = max(r[2] for r in rows)
    w = params.window_days * day
    D = params.match_hours * hour

    old_ts = {}
    for u, c, t, k in rows:
        if c == older:
            old_ts.setdefault(u, []).append(t)
    for ts in old_ts.values():
        ts.sort()
    newer_users = {u for u, c, t, k in rows if c == newer}

    def pre_count(u, t):
        return sum(1 for s in old_ts.get(u, ()) if t - w <= s < t)

    first_new = {}
    for u, c, t, k in rows:
        if c == newer and (u not in first_new or t < first_new[u]):
            first_new[u] = t
    explorers = sorted(
        ((t, rank[u], u) for u, t in first_new.items()
         if t + w <= corpus_end and pre_count(u, t) >= params.min_pre))

    loyal = [u for u in users if u not in newer_users and u in old_ts]
    used, matches, unmatched = set(), [], []
    for t, _, eu in explorers:
        pre_e = pre_count(eu, t)
        cands = []
        for cu in loyal:
            if cu in used:
                continue
            window = [s for s in old_ts[cu] if t - D <= s <= t + D]
            if not window:
                continue
            anchor = min(window, key=lambda s: (abs(s - t), s))
            pre_ne = pre_count(cu, anchor)
            diff = abs(pre_ne - pre_e)
            if diff < params.tolerance * pre_e:
                cands.append((diff, abs(anchor - t), rank[cu],
                              cu, anchor, pre_ne))
        if not cands:
            unmatched.append(eu)
            continue
        diff, dist, _, cu, anchor, pre_ne = min(cands)
        used.add(cu)
        matches.append((eu, cu, t, anchor, pre_e, pre_ne))
    return matches, unmatched


def js_oracle(p, q):
    """Naive-summation Jensen-Shannon divergence, base 2."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    m = 0.5 * (p + q)
    total = 0.0
    for i in range(len(p)):
        if p[i] > 0:
            total += 0.5 * p[i] * np.log2(p[i] / m[i])
        if q[i] > 0:
            total += 0.5 * q[i] * np.log2(q[i] / m[i])
    return float(total)
