from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import ev, index_of, js_oracle, midrank_percentile
from relcom import kernels
from relcom.affix import AffixPair
from relcom.errors import ConfigurationError, ContractViolationError
from relcom.similarity import (PercentileScale, background_percentiles,
                               filter_related, jaccard, js_divergence,
                               load_topic_file, score_pairs)


def test_jaccard_basics():
    assert jaccard({1, 2}, {2, 3}) == pytest.approx(1 / 3)
    assert jaccard([], []) == 0.0
    assert jaccard({"a"}, {"a"}) == 1.0
    assert jaccard({1}, {2}) == 0.0
    # iterables with duplicates behave as sets
    assert jaccard([1, 1, 2], [2, 2]) == pytest.approx(1 / 2)


def test_js_edge_values_exact():
    # dyadic probabilities keep the identities exact in float arithmetic
    p = [0.5, 0.25, 0.25, 0.0]
    q = [0.0, 0.0, 0.5, 0.5]
    assert js_divergence(p, p) == 0.0
    assert js_divergence([1.0, 0.0], [0.0, 1.0]) == 1.0
    assert js_divergence([0.5, 0.5, 0.0, 0.0], [0.0, 0.0, 0.5, 0.5]) == 1.0
    v = js_divergence(p, q)
    assert 0.0 < v < 1.0
    assert v == pytest.approx(js_oracle(p, q), abs=1e-12)


def test_js_symmetry_and_range():
    rng = np.random.default_rng(5)
    for _ in range(50):
        p = rng.dirichlet(np.ones(6))
        q = rng.dirichlet(np.ones(6))
        a = js_divergence(p, q)
        assert a == pytest.approx(js_divergence(q, p), abs=1e-15)
        assert -1e-12 <= a <= 1.0 + 1e-12
        assert a == pytest.approx(js_oracle(p, q), abs=1e-12)


def test_js_input_validation():
    with pytest.raises(ContractViolationError):
        js_divergence([0.5, 0.5], [1.0])
    with pytest.raises(ContractViolationError):
        js_divergence([[0.5], [0.5]], [[1.0], [0.0]])
    with pytest.raises(ContractViolationError):
        js_divergence([-0.1, 1.1], [0.5, 0.5])


def test_percentile_scale_matches_oracle():
    rng = np.random.default_rng(9)
    bg = np.round(rng.random(200), 2)  # force plenty of ties
    scale = PercentileScale(bg)
    for v in [0.0, 1.0, -5.0, 5.0, *np.round(rng.random(30), 2)]:
        assert scale.percentile(v) == pytest.approx(midrank_percentile(bg, v))
        assert scale.percentile_lower_better(v) == pytest.approx(
            100.0 - midrank_percentile(bg, v))
    # vector input
    vs = np.round(rng.random(20), 2)
    got = scale.percentile(vs)
    assert got == pytest.approx([midrank_percentile(bg, v) for v in vs])


def test_percentile_scale_rejects_empty():
    with pytest.raises(ConfigurationError):
        PercentileScale(np.array([]))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=40),
       st.integers(-1, 6))
def test_property_percentile_midrank(bg, v):
    scale = PercentileScale(np.array(bg, dtype=float))
    assert scale.percentile(float(v)) == pytest.approx(
        midrank_percentile(bg, v))


def test_load_topic_file(tmp_path):
    p = tmp_path / "theta.jsonl"
    rows = [
        {"community": "Alpha", "theta": [0.5, 0.5]},
        {"community": "beta", "theta": [1.0, 0.0]},
        {"community": "alpha", "theta": [0.25, 0.75]},  # later duplicate wins
    ]
    p.write_text("\n".join(json.dumps(r) for r in rows))
    vecs = load_topic_file(p)
    assert set(vecs) == {"alpha", "beta"}
    assert vecs["alpha"].tolist() == [0.25, 0.75]

    p.write_text('{"community":"a","theta":[0.5,0.6]}')
    with pytest.raises(ConfigurationError):  # sums to 1.1
        load_topic_file(p)
    p.write_text('{"community":"a","theta":[0.5,"x"]}')
    with pytest.raises(ConfigurationError):
        load_topic_file(p)
    p.write_text('{"community":"a","theta":[1.0]}\n{"community":"b","theta":[0.5,0.5]}')
    with pytest.raises(ConfigurationError):  # length mismatch
        load_topic_file(p)
    p.write_text("not json")
    with pytest.raises(ConfigurationError):
        load_topic_file(p)


def _link_corpus():
    """Four communities with controlled link sets.

    a: {u1,u2,u3}; ab: {u1,u2,u4}  -> jaccard 0.5
    c: {u5};       cd: {u6}        -> jaccard 0.0
    """
    events = []
    urls = {
        "a": ["h.io/1", "h.io/2", "h.io/3"],
        "ab": ["h.io/1", "h.io/2", "h.io/4"],
        "c": ["h.io/5"],
        "cd": ["h.io/6"],
    }
    t = 0
    for comm, us in urls.items():
        for i, u in enumerate(us):
            events.append(ev(f"{comm}{i}", comm, 100 + t, "post", u,
                             f"tok_{comm}"))
            t += 1
    return events


def test_score_pairs_unigram_backend():
    idx = index_of(_link_corpus())
    pairs = [AffixPair("a", "ab", "b", "suffix"),
             AffixPair("c", "cd", "d", "suffix"),
             AffixPair("zz", "zzq", "q", "suffix")]  # not eligible -> skipped
    res = score_pairs(idx, pairs, ["a", "ab", "c", "cd"], threshold_pct=90.0)
    assert res.topic_source == "unigrams"
    assert res.n_link_background == 6
    by = {(s.base, s.modified): s for s in res.scores}
    assert set(by) == {("a", "ab"), ("c", "cd")}
    s = by[("a", "ab")]
    assert s.jaccard == pytest.approx(0.5)
    # background jaccards: one 0.5, five 0.0
    assert s.link_pct == pytest.approx(midrank_percentile(
        [0.5, 0, 0, 0, 0, 0], 0.5))
    assert by[("c", "cd")].jaccard == 0.0
    assert s.related  # 91.67 >= 90


def test_score_pairs_topic_file_backend(tmp_path):
    idx = index_of(_link_corpus())
    theta = {
        "a": [0.5, 0.5, 0.0],
        "ab": [0.5, 0.5, 0.0],   # identical to a -> js 0
        "c": [1.0, 0.0, 0.0],
        "cd": [0.0, 0.0, 1.0],   # disjoint from c -> js 1
    }
    p = tmp_path / "theta.jsonl"
    p.write_text("\n".join(json.dumps({"community": k, "theta": v})
                           for k, v in theta.items()))
    pairs = [AffixPair("a", "ab", "b", "suffix"),
             AffixPair("c", "cd", "d", "suffix")]
    res = score_pairs(idx, pairs, ["a", "ab", "c", "cd"], topic_file=p)
    assert res.topic_source == "file"
    by = {(s.base, s.modified): s for s in res.scores}
    assert by[("a", "ab")].js == 0.0
    assert by[("c", "cd")].js == 1.0
    # js 0 is the minimum of the background -> highest topic percentile
    assert by[("a", "ab")].topic_pct > by[("c", "cd")].topic_pct
    # verify js values against the naive oracle through the background
    want = js_oracle(theta["a"], theta["c"])
    got = next(s for s in res.scores if s.base == "a").js
    assert got == 0.0
    assert want > 0.0


def test_score_pairs_topic_file_missing_community(tmp_path):
    idx = index_of(_link_corpus())
    p = tmp_path / "theta.jsonl"
    rows = [{"community": "a", "theta": [0.5, 0.5]},
            {"community": "ab", "theta": [0.5, 0.5]}]
    p.write_text("\n".join(json.dumps(r) for r in rows))
    pairs = [AffixPair("a", "ab", "b", "suffix"),
             AffixPair("c", "cd", "d", "suffix")]
    res = score_pairs(idx, pairs, ["a", "ab", "c", "cd"], topic_file=p)
    by = {(s.base, s.modified): s for s in res.scores}
    # c/cd lack vectors: js and topic_pct stay None, link side still works
    assert by[("c", "cd")].js is None
    assert by[("c", "cd")].topic_pct is None
    assert by[("a", "ab")].js == 0.0


def test_score_pairs_requires_two_eligible():
    idx = index_of(_link_corpus())
    with pytest.raises(ConfigurationError):
        score_pairs(idx, [], ["a"])
    with pytest.raises(ConfigurationError):
        score_pairs(idx, [], ["a", "ab"], threshold_pct=101.0)


def test_workers_give_identical_results():
    rng = np.random.default_rng(2)
    events = []
    comms = [f"c{i}" for i in range(12)]
    for ci, comm in enumerate(comms):
        for j in range(20):
            url = f"h.io/{rng.integers(30)}"
            events.append(ev(f"u{ci}_{j}", comm, int(rng.integers(1000)),
                             "post", url, f"w{rng.integers(15)} w{rng.integers(15)}"))
    idx = index_of(events)
    pairs = [AffixPair("c1", "c10", "0", "suffix"),
             AffixPair("c1", "c11", "1", "suffix")]
    r1 = score_pairs(idx, pairs, comms, workers=1)
    r4 = score_pairs(idx, pairs, comms, workers=4)
    for a, b in zip(r1.scores, r4.scores):
        assert a == b
    s1 = background_percentiles(idx, comms, "link", workers=1)
    s4 = background_percentiles(idx, comms, "link", workers=4)
    assert np.array_equal(s1._sorted, s4._sorted)
    t1 = background_percentiles(idx, comms, "topic", workers=1)
    t4 = background_percentiles(idx, comms, "topic", workers=4)
    assert np.array_equal(t1._sorted, t4._sorted)


def test_background_percentiles_validation():
    idx = index_of(_link_corpus())
    with pytest.raises(ConfigurationError):
        background_percentiles(idx, ["a"], "link")
    with pytest.raises(ConfigurationError):
        background_percentiles(idx, ["a", "ab"], "cosine")


def test_sparse_unigram_js_matches_dense_oracle():
    """The smoothed sparse-JS kernel must agree with densifying by hand."""
    events = [
        ev("u1", "x", 1, "post", None, "apple banana apple"),
        ev("u2", "x", 2, "comment", None, "cherry"),
        ev("u3", "xy", 3, "post", None, "banana banana date"),
        ev("u4", "xy", 4, "comment", None, "egg"),
    ]
    idx = index_of(events)
    scale = background_percentiles(idx, ["x", "xy"], "topic")
    got = scale._sorted[0]

    # dense reconstruction with add-one smoothing over the joint vocab
    vocab = sorted({"apple", "banana", "cherry", "date", "egg"})
    cx = idx.token_counts("x")
    cy = idx.token_counts("xy")
    p = np.array([cx.get(w, 0) + 1 for w in vocab], dtype=float)
    q = np.array([cy.get(w, 0) + 1 for w in vocab], dtype=float)
    p /= p.sum()
    q /= q.sum()
    assert got == pytest.approx(js_oracle(p, q), abs=1e-12)


def test_filter_related_and_monotonicity():
    pairs = [AffixPair("a", "ab", "b", "suffix"),
             AffixPair("c", "cd", "d", "suffix"),
             AffixPair("e", "ef", "f", "suffix")]
    from relcom.similarity import PairScore
    scores = [
        PairScore("a", "ab", "b", "suffix", 0.5, 0.1, 95.0, 40.0, True),
        PairScore("c", "cd", "d", "suffix", 0.0, 0.2, 40.0, 92.0, True),
        # no score row for e/ef -> always dropped
    ]
    assert {(p.base, p.modified) for p in filter_related(pairs, scores, 90.0)} \
        == {("a", "ab"), ("c", "cd")}
    assert [(p.base, p.modified) for p in filter_related(pairs, scores, 93.0)] \
        == [("a", "ab")]
    assert filter_related(pairs, scores, 96.0) == []
    with pytest.raises(ConfigurationError):
        filter_related(pairs, scores, -1.0)

    # monotone: raising the threshold never adds a pair
    rng = np.random.default_rng(4)
    rnd_scores = [PairScore(f"b{i}", f"b{i}x", "x", "suffix", 0.0,
                            None if i % 5 == 0 else float(rng.random()),
                            float(rng.random() * 100),
                            None if i % 5 == 0 else float(rng.random() * 100),
                            True)
                  for i in range(60)]
    rnd_pairs = [AffixPair(s.base, s.modified, "x", "suffix")
                 for s in rnd_scores]
    thresholds = sorted(float(t) for t in rng.random(200) * 100)
    prev = None
    for t in thresholds:
        cur = {(p.base, p.modified) for p in filter_related(rnd_pairs, rnd_scores, t)}
        if prev is not None:
            assert cur <= prev
        prev = cur


def test_condensed_index_layout():
    n = 7
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            assert kernels.condensed_index(i, j, n) == k
            k += 1
    assert kernels.condensed_size(n) == k
