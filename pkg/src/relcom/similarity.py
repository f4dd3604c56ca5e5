"""Pair similarity scoring.

Two ingredients: Jaccard overlap of the link-url sets, and Jensen-Shannon
divergence between topic distributions. Raw values mean little on their
own, so each is placed on a percentile scale built from the background of
ALL unordered pairs of eligible communities; a pair counts as related when
either metric reaches the percentile threshold (link overlap high enough,
or topic divergence low enough).
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .affix import AffixPair
from .corpus import CommunityIndex, normalize_community
from .errors import ConfigurationError, ContractViolationError


def jaccard(a: Iterable, b: Iterable) -> float:
    """|A n B| / |A u B|; two empty sets score 0."""
    sa, sb = set(a), set(b)
    union = len(sa | sb)
    return len(sa & sb) / union if union else 0.0


def js_divergence(p: Sequence[float], q: Sequence[float]) -> float:
    """Jensen-Shannon divergence, base 2 (0 = identical, 1 = disjoint)."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.ndim != 1 or p.shape != q.shape:
        raise ContractViolationError(
            f"distributions must be 1-d and same length, got {p.shape} vs {q.shape}")
    if (p < 0).any() or (q < 0).any():
        raise ContractViolationError("distributions must be non-negative")
    m = 0.5 * (p + q)
    with np.errstate(divide="ignore", invalid="ignore"):
        tp = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0) / m), 0.0)
        tq = np.where(q > 0, q * np.log2(np.where(q > 0, q, 1.0) / m), 0.0)
    return float(0.5 * (tp.sum() + tq.sum()))


class PercentileScale:
    """Midrank percentile of a value against a fixed background sample.

    percentile(v) = 100 * (#background < v + 0.5 * #background == v) / N.
    """

    def __init__(self, background: np.ndarray):
        background = np.asarray(background, dtype=np.float64)
        if background.size == 0:
            raise ConfigurationError("empty background sample")
        self._sorted = np.sort(background)

    @property
    def size(self) -> int:
        return len(self._sorted)

    def percentile(self, values):
        """Percentile where larger raw values rank higher."""
        v = np.asarray(values, dtype=np.float64)
        lo = np.searchsorted(self._sorted, v, "left")
        hi = np.searchsorted(self._sorted, v, "right")
        out = 100.0 * (lo + 0.5 * (hi - lo)) / len(self._sorted)
        return float(out) if np.isscalar(values) or v.ndim == 0 else out

    def percentile_lower_better(self, values):
        """Percentile where smaller raw values rank higher (divergences)."""
        one = np.isscalar(values)
        res = 100.0 - np.asarray(self.percentile(values))
        return float(res) if one else res


def load_topic_file(path) -> dict[str, np.ndarray]:
    """Read topic vectors from JSONL {"community": name, "theta": [...]}.

    Names are normalized like community names; vectors must be equal
    length, non-negative, finite, and sum to 1 (within 1e-3; exact
    normalization is applied). Later duplicates win.
    """
    vecs: dict[str, np.ndarray] = {}
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except ValueError as exc:
                raise ConfigurationError(f"{path}:{ln}: bad JSON ({exc})") from None
            name = obj.get("community")
            theta = obj.get("theta")
            if not isinstance(name, str) or not isinstance(theta, list):
                raise ConfigurationError(
                    f"{path}:{ln}: expected community (str) and theta (list)")
            try:
                v = np.asarray(theta, dtype=np.float64)
            except (ValueError, TypeError):
                raise ConfigurationError(
                    f"{path}:{ln}: theta must be non-negative finite numbers"
                ) from None
            if v.ndim != 1 or not np.isfinite(v).all() or (v < 0).any():
                raise ConfigurationError(
                    f"{path}:{ln}: theta must be non-negative finite numbers")
            if dim is None:
                dim = len(v)
            elif len(v) != dim:
                raise ConfigurationError(
                    f"{path}:{ln}: theta length {len(v)} != {dim}")
            s = v.sum()
            if abs(s - 1.0) > 1e-3 or s <= 0:
                raise ConfigurationError(
                    f"{path}:{ln}: theta sums to {s:.6f}, expected 1")
            vecs[normalize_community(name)] = v / s
    return vecs


@dataclass(frozen=True, slots=True)
class PairScore:
    """Similarity verdict for one affix pair."""
    base: str
    modified: str
    affix: str
    position: str
    jaccard: float
    js: float | None
    link_pct: float
    topic_pct: float | None
    related: bool


@dataclass
class SimilarityResult:
    scores: list[PairScore]
    threshold_pct: float
    n_link_background: int
    n_topic_background: int
    topic_source: str  # "file", "unigrams", or "none"

    @property
    def related(self) -> list[PairScore]:
        return [s for s in self.scores if s.related]


def _row_chunks(n: int, pieces: int) -> list[tuple[int, int]]:
    """Split rows [0, n) into pieces of roughly equal pair count."""
    if n <= 1:
        return []
    per_row = np.arange(n - 1, 0, -1, dtype=np.int64)
    cum = np.concatenate(([0], np.cumsum(per_row)))
    targets = np.linspace(0, cum[-1], pieces + 1)
    bounds = np.searchsorted(cum, targets, "left")
    bounds[0], bounds[-1] = 0, n - 1
    out = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        if b > a:
            out.append((int(a), int(b)))
    return out


def _run_rows(fn, n_rows: int, workers: int) -> None:
    """fn(row_lo, row_hi) over [0, n_rows), possibly in parallel threads."""
    if workers <= 1:
        fn(0, n_rows)
        return
    chunks = _row_chunks(n_rows + 1, workers * 4)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda c: fn(*c), chunks))


def _link_background(index: CommunityIndex, cids: list[int],
                     workers: int) -> np.ndarray:
    parts = [index.link_ids(c).astype(np.int64) for c in cids]
    offsets = np.zeros(len(cids) + 1, dtype=np.int64)
    np.cumsum([len(p) for p in parts], out=offsets[1:])
    flat = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    out = np.empty(kernels.condensed_size(len(cids)), dtype=np.float64)
    _run_rows(lambda lo, hi: kernels.jaccard_pairs_chunk(flat, offsets, lo, hi, out),
              len(cids) - 1, workers)
    return out


def _topic_background_file(vecs: dict[str, np.ndarray], present: list[str],
                           workers: int) -> np.ndarray:
    theta = np.ascontiguousarray(np.stack([vecs[n] for n in present]))
    out = np.empty(kernels.condensed_size(len(present)), dtype=np.float64)
    _run_rows(lambda lo, hi: kernels.js_pairs_chunk(theta, lo, hi, out),
              len(present) - 1, workers)
    return out


def _topic_background_unigrams(index: CommunityIndex, cids: list[int],
                               workers: int) -> np.ndarray:
    toks = [index.token_arrays(c)[0] for c in cids]
    cnts = [index.token_arrays(c)[1] for c in cids]
    offsets = np.zeros(len(cids) + 1, dtype=np.int64)
    np.cumsum([len(t) for t in toks], out=offsets[1:])
    tok_flat = np.concatenate(toks) if toks else np.empty(0, dtype=np.int64)
    cnt_flat = np.concatenate(cnts) if cnts else np.empty(0, dtype=np.int64)
    totals = np.array([int(index.token_totals[c]) for c in cids], dtype=np.int64)
    vocab = len(np.unique(tok_flat))
    out = np.empty(kernels.condensed_size(len(cids)), dtype=np.float64)
    _run_rows(lambda lo, hi: kernels.js_sparse_pairs_chunk(
        tok_flat, cnt_flat, offsets, totals, vocab, lo, hi, out),
        len(cids) - 1, workers)
    return out


def background_percentiles(index: CommunityIndex, eligible: Sequence[str],
                           metric: str = "link", *, topic_file=None,
                           workers: int = 1) -> PercentileScale:
    """Percentile scale over every unordered pair of eligible communities.

    metric "link" ranks Jaccard overlaps of link sets; "topic" ranks
    Jensen-Shannon divergences of topic vectors (from `topic_file` when
    given, otherwise smoothed unigram distributions).
    """
    elig = sorted({normalize_community(n) for n in eligible})
    if len(elig) < 2:
        raise ConfigurationError(
            f"background needs at least 2 eligible communities, got {len(elig)}")
    if metric == "link":
        cids = [index.community_id(n) for n in elig]
        return PercentileScale(_link_background(index, cids, workers))
    if metric == "topic":
        if topic_file is not None:
            vecs = load_topic_file(topic_file)
            present = [n for n in elig if n in vecs]
            if len(present) < 2:
                raise ConfigurationError(
                    "fewer than 2 eligible communities have topic vectors")
            return PercentileScale(_topic_background_file(vecs, present, workers))
        present = [n for n in elig
                   if index.token_totals[index.community_id(n)] > 0]
        if len(present) < 2:
            raise ConfigurationError(
                "fewer than 2 eligible communities have any tokens")
        tcids = [index.community_id(n) for n in present]
        return PercentileScale(_topic_background_unigrams(index, tcids, workers))
    raise ConfigurationError(f"unknown metric {metric!r}")


def filter_related(pairs: Sequence[AffixPair], scores: Sequence[PairScore],
                   threshold_pct: float) -> list[AffixPair]:
    """Affix pairs whose link or topic percentile reaches the threshold.

    Reuses the percentiles stored on the scores, so raising the threshold
    never adds a pair. Pairs without a score are dropped.
    """
    if not 0.0 <= threshold_pct <= 100.0:
        raise ConfigurationError(f"threshold_pct out of range: {threshold_pct}")
    by = {(s.base, s.modified): s for s in scores}
    out = []
    for p in pairs:
        s = by.get((p.base, p.modified))
        if s is None:
            continue
        if s.link_pct >= threshold_pct or (
                s.topic_pct is not None and s.topic_pct >= threshold_pct):
            out.append(p)
    return out


def score_pairs(index: CommunityIndex, pairs: Sequence[AffixPair],
                eligible: Sequence[str], *, topic_file=None,
                threshold_pct: float = 90.0,
                workers: int = 1) -> SimilarityResult:
    """Score affix pairs against the all-eligible-pairs background.

    `eligible` is the community population whose pairs form the
    background; affix pairs whose two sides are not both in it are
    ignored. Topic vectors come from `topic_file` when given, otherwise
    from add-one-smoothed unigram distributions of community text.
    """
    if not 0.0 <= threshold_pct <= 100.0:
        raise ConfigurationError(f"threshold_pct out of range: {threshold_pct}")
    elig = sorted({normalize_community(n) for n in eligible})
    if len(elig) < 2:
        raise ConfigurationError(
            f"background needs at least 2 eligible communities, got {len(elig)}")
    pos_of = {n: i for i, n in enumerate(elig)}
    cids = [index.community_id(n) for n in elig]

    link_bg = _link_background(index, cids, workers)
    link_scale = PercentileScale(link_bg)

    if topic_file is not None:
        vecs = load_topic_file(topic_file)
        present = [n for n in elig if n in vecs]
        topic_source = "file"
    else:
        vecs = None
        present = [n for n in elig
                   if index.token_totals[index.community_id(n)] > 0]
        topic_source = "unigrams" if len(present) >= 2 else "none"
    tpos_of = {n: i for i, n in enumerate(present)}

    topic_bg = None
    topic_scale = None
    if len(present) >= 2:
        if vecs is not None:
            topic_bg = _topic_background_file(vecs, present, workers)
        else:
            tcids = [index.community_id(n) for n in present]
            topic_bg = _topic_background_unigrams(index, tcids, workers)
        topic_scale = PercentileScale(topic_bg)

    E = len(elig)
    scores = []
    for p in pairs:
        i = pos_of.get(p.base)
        j = pos_of.get(p.modified)
        if i is None or j is None:
            continue
        a, b = (i, j) if i < j else (j, i)
        jac = float(link_bg[kernels.condensed_index(a, b, E)])
        link_pct = link_scale.percentile(jac)
        js = topic_pct = None
        ti = tpos_of.get(p.base)
        tj = tpos_of.get(p.modified)
        if topic_scale is not None and ti is not None and tj is not None:
            ta, tb = (ti, tj) if ti < tj else (tj, ti)
            js = float(topic_bg[kernels.condensed_index(ta, tb, len(present))])
            topic_pct = topic_scale.percentile_lower_better(js)
        related = bool(link_pct >= threshold_pct
                       or (topic_pct is not None and topic_pct >= threshold_pct))
        scores.append(PairScore(p.base, p.modified, p.affix, p.position,
                                jac, js, link_pct, topic_pct, related))

    return SimilarityResult(
        scores=scores,
        threshold_pct=threshold_pct,
        n_link_background=len(link_bg),
        n_topic_background=len(topic_bg) if topic_bg is not None else 0,
        topic_source=topic_source,
    )
