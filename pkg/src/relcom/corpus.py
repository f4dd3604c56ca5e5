"""Event corpus: stream parsing, validation, and an immutable columnar index.

An event is (user, community, ts, kind, url?, text?). Parsing is lenient:
malformed lines are counted and skipped, never fatal. The index interns
identifiers as integer ids whose numeric order equals lexicographic order
of the underlying strings, which makes every downstream tie-break
deterministic and cheap.
"""

from __future__ import annotations

import bisect
import json
import pickle
from dataclasses import dataclass
from typing import IO, Iterable, Iterator
from urllib.parse import urlsplit

import numpy as np

from . import kernels
from .errors import ContractViolationError

POST = 0
COMMENT = 1
KIND_CODES = {"post": POST, "comment": COMMENT}
KIND_NAMES = ("post", "comment")

_TS_MAX = 1 << 62  # keeps timestamps safely inside int64


def normalize_community(name: str) -> str:
    """Canonical community key: case folded via str.lower()."""
    return name.lower()


def normalize_url(url: str) -> str | None:
    """Normalize a link url: drop scheme, lowercase host, strip trailing '/'.

    Returns None when nothing remains (empty or whitespace url).
    """
    url = url.strip()
    if not url:
        return None
    if "://" in url:
        parts = urlsplit(url)
    elif url.startswith("//"):
        parts = urlsplit(url)
    else:
        parts = urlsplit("//" + url)
    host = parts.netloc.lower()
    path = parts.path.rstrip("/")
    out = host + path
    if parts.query:
        out += "?" + parts.query
    if parts.fragment:
        out += "#" + parts.fragment
    return out or None


def _validate_fields(user, comm, ts, kind, url, text):
    """Common field validation; returns a parsed tuple or None."""
    if not isinstance(user, str) or not user:
        return None
    if not isinstance(comm, str) or not comm:
        return None
    if isinstance(ts, bool) or not isinstance(ts, int):
        return None
    if ts < 0 or ts > _TS_MAX:
        return None
    code = KIND_CODES.get(kind)
    if code is None:
        return None
    if url is not None and not isinstance(url, str):
        return None
    if url == "":
        url = None
    if url is not None and code != POST:
        return None
    if text is not None and not isinstance(text, str):
        return None
    if text == "":
        text = None
    return (user, comm, ts, code, url, text)


def decode_json_line(line: str):
    """Parse one JSONL record; returns (user, comm, ts, kind_code, url, text)
    or None when the line is malformed."""
    try:
        obj = json.loads(line)
    except (ValueError, RecursionError):
        return None
    if not isinstance(obj, dict):
        return None
    return _validate_fields(obj.get("user"), obj.get("community"),
                            obj.get("ts"), obj.get("kind"),
                            obj.get("url"), obj.get("text"))


def _decode_csv_row(row: dict):
    user = row.get("user")
    comm = row.get("community")
    ts_raw = row.get("ts")
    kind = row.get("kind")
    url = row.get("url") or None
    text = row.get("text") or None
    if ts_raw is None:
        return None
    try:
        ts = int(ts_raw)
    except ValueError:
        return None
    return _validate_fields(user, comm, ts, kind, url, text)


@dataclass
class ParseStats:
    """Counters accumulated while reading a stream."""
    records: int = 0
    skipped: int = 0


@dataclass(frozen=True, slots=True)
class EventRecord:
    """One validated event. `community` is the normalized name; `display`
    holds the original spelling when it differs."""
    user: str
    community: str
    ts: int
    kind: str
    url: str | None = None
    tokens: tuple[str, ...] = ()
    display: str | None = None

    @property
    def display_name(self) -> str:
        return self.display if self.display is not None else self.community


def _tokens_of(text: str) -> tuple[str, ...]:
    return tuple(text.lower().split())


def _iter_lines(source) -> Iterator:
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "rb") as fh:
            yield from fh
    else:
        yield from source


def parse_events(source, fmt: str = "jsonl",
                 stats: ParseStats | None = None) -> Iterator[EventRecord]:
    """Yield EventRecords from a path, file object, or iterable of lines.

    fmt is "jsonl" or "csv". Malformed entries are counted in `stats`
    (when given) and skipped.
    """
    if stats is None:
        stats = ParseStats()
    if fmt == "jsonl":
        for line in _iter_lines(source):
            if isinstance(line, bytes):
                try:
                    line = line.decode("utf-8")
                except UnicodeDecodeError:
                    stats.skipped += 1
                    continue
            if not line.strip(" \t\r\n"):
                continue
            parsed = decode_json_line(line)
            if parsed is None:
                stats.skipped += 1
                continue
            stats.records += 1
            yield _record_from(parsed)
    elif fmt == "csv":
        import csv

        if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
            fh = open(source, "r", newline="", encoding="utf-8", errors="replace")
            own = True
        else:
            fh = source
            own = False
        try:
            reader = csv.DictReader(fh)
            while True:
                try:
                    row = next(reader)
                except StopIteration:
                    break
                except csv.Error:
                    stats.skipped += 1
                    continue
                parsed = _decode_csv_row(row)
                if parsed is None:
                    stats.skipped += 1
                    continue
                stats.records += 1
                yield _record_from(parsed)
        finally:
            if own:
                fh.close()
    else:
        raise ValueError(f"unknown format {fmt!r}; expected 'jsonl' or 'csv'")


def _record_from(parsed) -> EventRecord:
    user, comm, ts, code, url, text = parsed
    norm = normalize_community(comm)
    return EventRecord(
        user=user,
        community=norm,
        ts=ts,
        kind=KIND_NAMES[code],
        url=normalize_url(url) if url else None,
        tokens=_tokens_of(text) if text else (),
        display=comm if comm != norm else None,
    )


# --------------------------------------------------------------- finalizing

def _relabel(col: np.ndarray, table: list):
    """Compress referenced ids and relabel so id order == sort order of keys.

    Entries with equal keys merge into one id. Returns (new_col, new_table)
    where new_table holds the distinct keys in sorted order. Negative ids
    pass through unchanged.
    """
    mask = col >= 0
    out = np.full(len(col), -1, dtype=col.dtype)
    if not mask.any():
        return out, []
    keep = np.unique(col[mask])
    keys = [table[i] for i in keep.tolist()]
    order = sorted(range(len(keep)), key=keys.__getitem__)
    rank = np.empty(len(keep), dtype=col.dtype)
    new_table: list = []
    for pos in order:
        k = keys[pos]
        if not new_table or k != new_table[-1]:
            new_table.append(k)
        rank[pos] = len(new_table) - 1
    out[mask] = rank[np.searchsorted(keep, col[mask])]
    return out, new_table


class CommunityIndex:
    """Immutable columnar view of a corpus.

    Events are stored twice as permutation views: community-major, sorted
    by (community, ts, user, kind), and user x community, sorted by ts
    within each pair. All id spaces (users, communities, urls, token
    tuples) are lexicographically ordered, so comparing ids compares
    strings.
    """

    def __init__(self, data: dict):
        self.__dict__.update(data)
        self._user_lookup_cache = None

    # -- basic shape --

    @property
    def n_communities(self) -> int:
        return len(self.names)

    @property
    def n_users(self) -> int:
        return len(self.user_names)

    @property
    def n_events(self) -> int:
        return len(self.ev_ts)

    # -- name resolution --

    def community_id(self, name: str) -> int:
        """Id for a community name (any casing); raises KeyError if absent."""
        norm = normalize_community(name)
        i = bisect.bisect_left(self.names, norm)
        if i == len(self.names) or self.names[i] != norm:
            raise KeyError(name)
        return i

    def has_community(self, name: str) -> bool:
        norm = normalize_community(name)
        i = bisect.bisect_left(self.names, norm)
        return i < len(self.names) and self.names[i] == norm

    def display_name(self, name: str) -> str:
        return self.displays[self.community_id(name)]

    def user_id(self, user: str) -> int | None:
        i = bisect.bisect_left(self.user_names, user)
        if i == len(self.user_names) or self.user_names[i] != user:
            return None
        return i

    # -- per-community accessors --

    def _cid(self, name_or_id) -> int:
        return name_or_id if isinstance(name_or_id, (int, np.integer)) \
            else self.community_id(name_or_id)

    def community_slice(self, name_or_id) -> tuple[int, int]:
        cid = self._cid(name_or_id)
        return int(self.comm_offsets[cid]), int(self.comm_offsets[cid + 1])

    def first_event_time(self, name_or_id) -> int:
        lo, _ = self.community_slice(name_or_id)
        return int(self.ev_ts[lo])

    def event_count(self, name_or_id) -> int:
        lo, hi = self.community_slice(name_or_id)
        return hi - lo

    def poster_count(self, name_or_id) -> int:
        return int(self.n_posters[self._cid(name_or_id)])

    def link_ids(self, name_or_id) -> np.ndarray:
        cid = self._cid(name_or_id)
        return self.link_flat[self.link_offsets[cid]:self.link_offsets[cid + 1]]

    def link_set(self, name_or_id) -> frozenset:
        return frozenset(self.url_table[i] for i in self.link_ids(name_or_id).tolist())

    def token_arrays(self, name_or_id) -> tuple[np.ndarray, np.ndarray]:
        cid = self._cid(name_or_id)
        lo, hi = self.ctok_offsets[cid], self.ctok_offsets[cid + 1]
        return self.ctok_flat[lo:hi], self.ctok_counts[lo:hi]

    def token_counts(self, name_or_id) -> dict:
        toks, cnts = self.token_arrays(name_or_id)
        return {self.token_table[t]: int(c)
                for t, c in zip(toks.tolist(), cnts.tolist())}

    def first_actions(self, name_or_id) -> tuple[np.ndarray, np.ndarray]:
        """(uids, ts) of each distinct user's first action in the community,
        ordered by (first-action ts, user id)."""
        lo, hi = self.community_slice(name_or_id)
        uids = self.ev_uid[lo:hi]
        _, first_idx = np.unique(uids, return_index=True)
        first_idx.sort()
        return uids[first_idx], self.ev_ts[lo:hi][first_idx]

    # -- user x community view --

    def pair_slice(self, uid: int, cid: int) -> tuple[int, int]:
        key = np.int64(uid) * self.n_communities + cid
        pos = np.searchsorted(self.uc_keys, key)
        if pos == len(self.uc_keys) or self.uc_keys[pos] != key:
            return 0, 0
        return int(self.uc_starts[pos]), int(self.uc_ends[pos])

    def pair_window_counts(self, uids: np.ndarray, cids: np.ndarray,
                           lows: np.ndarray, highs: np.ndarray) -> np.ndarray:
        """Count events of user i in community i inside [lows[i], highs[i]),
        vectorized over i."""
        keys = uids.astype(np.int64) * self.n_communities + cids.astype(np.int64)
        pos = np.searchsorted(self.uc_keys, keys)
        pos = np.minimum(pos, max(len(self.uc_keys) - 1, 0))
        if len(self.uc_keys):
            hit = self.uc_keys[pos] == keys
        else:
            hit = np.zeros(len(keys), dtype=bool)
        starts = np.where(hit, self.uc_starts[pos], 0).astype(np.int64)
        ends = np.where(hit, self.uc_ends[pos], 0).astype(np.int64)
        return kernels.window_counts(self.uc_ts, starts, ends,
                                     lows.astype(np.int64), highs.astype(np.int64))

    def activity_count(self, user: str, community: str, t_a: int, t_b: int) -> int:
        """Events by `user` in `community` with t_a <= ts < t_b."""
        uid = self.user_id(user)
        if uid is None or not self.has_community(community):
            return 0
        lo, hi = self.pair_slice(uid, self.community_id(community))
        sl = self.uc_ts[lo:hi]
        return int(np.searchsorted(sl, t_b, "left") - np.searchsorted(sl, t_a, "left"))

    # -- whole-corpus facts --

    @property
    def corpus_start(self) -> int | None:
        return int(self.ev_ts.min()) if len(self.ev_ts) else None

    @property
    def corpus_end(self) -> int | None:
        return int(self.ev_ts.max()) if len(self.ev_ts) else None

    def stats_rows(self) -> list[tuple]:
        """(community, first_ts, posters, events) per community, name order."""
        return [(self.names[c], self.first_event_time(c),
                 self.poster_count(c), self.event_count(c))
                for c in range(self.n_communities)]

    # -- persistence --

    _PERSISTED = (
        "names", "displays", "user_names", "url_table", "token_table",
        "text_table", "ev_uid", "ev_cid", "ev_ts", "ev_kind", "ev_link",
        "ev_text", "comm_offsets", "n_posters", "link_flat", "link_offsets",
        "ctok_flat", "ctok_counts", "ctok_offsets", "token_totals",
        "uc_keys", "uc_starts", "uc_ends", "uc_ts",
    )

    def save(self, path) -> None:
        payload = {"format": "relcom-index", "version": 1}
        payload.update({k: getattr(self, k) for k in self._PERSISTED})
        with open(path, "wb") as fh:
            pickle.dump(payload, fh, protocol=5)

    @classmethod
    def load(cls, path) -> "CommunityIndex":
        with open(path, "rb") as fh:
            payload = pickle.load(fh)
        if payload.pop("format", None) != "relcom-index":
            raise ContractViolationError(f"{path} is not a saved index")
        payload.pop("version", None)
        return cls(payload)

    # -- invariants (used by tests) --

    def validate(self) -> None:
        n = self.n_events
        C = self.n_communities
        assert len(self.comm_offsets) == C + 1
        assert self.comm_offsets[0] == 0 and self.comm_offsets[-1] == n
        assert list(self.names) == sorted(self.names)
        assert list(self.user_names) == sorted(self.user_names)
        assert list(self.url_table) == sorted(self.url_table)
        assert list(self.text_table) == sorted(self.text_table)
        for c in range(C):
            lo, hi = self.community_slice(c)
            assert hi > lo, "empty community survived finalize"
        # community-major ordering: stable under its own sort key
        order_key = np.lexsort((self.ev_kind, self.ev_uid, self.ev_ts, self.ev_cid))
        assert (order_key == np.arange(n)).all()
        for p in range(len(self.uc_keys)):
            sl = self.uc_ts[self.uc_starts[p]:self.uc_ends[p]]
            assert len(sl) > 0
            assert (np.diff(sl) >= 0).all()
        assert int(self.uc_ends.sum() - self.uc_starts.sum()) == n if n else True


def build_index(events: Iterable[EventRecord],
                exclude_users: Iterable[str] = ()) -> CommunityIndex:
    """Index an iterable of EventRecords (small/medium corpora, synthesis)."""
    users: dict[str, int] = {}
    comms: dict[str, int] = {}
    urls: dict[str, int] = {}
    texts: dict[tuple, int] = {}
    user_table: list[str] = []
    comm_table: list[str] = []
    display_table: list[str] = []
    url_table: list[str] = []
    text_table: list[tuple] = []
    rows_uid, rows_cid, rows_ts = [], [], []
    rows_kind, rows_link, rows_text = [], [], []

    for ev in events:
        uid = users.get(ev.user)
        if uid is None:
            uid = len(user_table)
            users[ev.user] = uid
            user_table.append(ev.user)
        cid = comms.get(ev.community)
        disp = ev.display_name
        if cid is None:
            cid = len(comm_table)
            comms[ev.community] = cid
            comm_table.append(ev.community)
            display_table.append(disp)
        elif disp < display_table[cid]:
            display_table[cid] = disp
        if ev.url:
            lid = urls.get(ev.url)
            if lid is None:
                lid = len(url_table)
                urls[ev.url] = lid
                url_table.append(ev.url)
        else:
            lid = -1
        if ev.tokens:
            tid = texts.get(ev.tokens)
            if tid is None:
                tid = len(text_table)
                texts[ev.tokens] = tid
                text_table.append(ev.tokens)
        else:
            tid = -1
        rows_uid.append(uid)
        rows_cid.append(cid)
        rows_ts.append(ev.ts)
        rows_kind.append(KIND_CODES[ev.kind])
        rows_link.append(lid)
        rows_text.append(tid)

    cols = {
        "uid": np.array(rows_uid, dtype=np.int32),
        "cid": np.array(rows_cid, dtype=np.int32),
        "ts": np.array(rows_ts, dtype=np.int64),
        "kind": np.array(rows_kind, dtype=np.int8),
        "link": np.array(rows_link, dtype=np.int32),
        "text": np.array(rows_text, dtype=np.int32),
        "users": user_table,
        "comms": comm_table,
        "displays": display_table,
        "urls": url_table,
        "texts": text_table,
        "skipped": 0,
    }
    return finalize_columns(cols, exclude_users)


def _as_str(v) -> str:
    return v.decode("utf-8") if isinstance(v, bytes) else v


def _as_tokens(v) -> tuple:
    if isinstance(v, tuple):
        return v
    return _tokens_of(_as_str(v))


def finalize_columns(cols: dict, exclude_users: Iterable[str] = ()) -> CommunityIndex:
    """Turn raw scanner/sink columns into a finished CommunityIndex."""
    uid = cols["uid"]
    cid = cols["cid"]
    ts = cols["ts"]
    kind = cols["kind"]
    link = cols["link"]
    text = cols["text"]

    user_table = [_as_str(u) for u in cols["users"]]
    comm_table = [_as_str(c) for c in cols["comms"]]
    display_table = [_as_str(d) for d in cols["displays"]]
    url_table = [_as_str(u) for u in cols["urls"]]
    text_tuples = [_as_tokens(t) for t in cols["texts"]]

    excluded = set(exclude_users)
    if excluded:
        bad_ids = {i for i, u in enumerate(user_table) if u in excluded}
        if bad_ids:
            keep_mask = ~np.isin(uid, np.fromiter(bad_ids, dtype=np.int32,
                                                  count=len(bad_ids)))
            uid, cid, ts = uid[keep_mask], cid[keep_mask], ts[keep_mask]
            kind, link, text = kind[keep_mask], link[keep_mask], text[keep_mask]

    uid, user_names = _relabel(uid, user_table)
    cid, names = _relabel(cid, comm_table)
    link, urls_sorted = _relabel(link, url_table)
    text, texts_sorted = _relabel(text, text_tuples)

    # displays follow their community through the relabel
    display_of: dict[str, str] = {}
    for i, norm in enumerate(comm_table):
        d = display_table[i]
        cur = display_of.get(norm)
        if cur is None or d < cur:
            display_of[norm] = d
    displays = [display_of[nm] for nm in names]

    n = len(uid)
    C = len(names)

    order = np.lexsort((text, link, kind, uid, ts, cid))
    uid, cid, ts = uid[order], cid[order], ts[order]
    kind, link, text = kind[order], link[order], text[order]

    if n:
        same = ((cid[1:] == cid[:-1]) & (ts[1:] == ts[:-1])
                & (uid[1:] == uid[:-1]) & (kind[1:] == kind[:-1])
                & (link[1:] == link[:-1]))
        keep = np.concatenate(([True], ~same))
        uid, cid, ts = uid[keep], cid[keep], ts[keep]
        kind, link, text = kind[keep], link[keep], text[keep]
        n = len(uid)

    comm_offsets = np.zeros(C + 1, dtype=np.int64)
    if n:
        np.cumsum(np.bincount(cid, minlength=C), out=comm_offsets[1:])

    # user x community view
    key = uid.astype(np.int64) * C + cid
    uc_order = np.lexsort((ts, key))
    uc_ts = ts[uc_order]
    keys_sorted = key[uc_order]
    if n:
        uc_keys, uc_starts = np.unique(keys_sorted, return_index=True)
        uc_ends = np.append(uc_starts[1:], n).astype(np.int64)
        uc_starts = uc_starts.astype(np.int64)
    else:
        uc_keys = np.empty(0, dtype=np.int64)
        uc_starts = np.empty(0, dtype=np.int64)
        uc_ends = np.empty(0, dtype=np.int64)

    # distinct posters per community
    if n:
        post_pairs = np.unique(key[kind == POST])
        n_posters = np.bincount((post_pairs % C).astype(np.int64),
                                minlength=C).astype(np.int64)
    else:
        n_posters = np.zeros(C, dtype=np.int64)

    # per-community sorted unique link ids
    L = len(urls_sorted)
    lmask = link >= 0
    if lmask.any():
        lp = np.unique(cid[lmask].astype(np.int64) * L + link[lmask])
        link_cids = lp // L
        link_flat = (lp % L).astype(np.int32)
        link_offsets = np.zeros(C + 1, dtype=np.int64)
        np.cumsum(np.bincount(link_cids, minlength=C), out=link_offsets[1:])
    else:
        link_flat = np.empty(0, dtype=np.int32)
        link_offsets = np.zeros(C + 1, dtype=np.int64)

    # per-community token bags
    token_table: list[str] = sorted({w for tt in texts_sorted for w in tt})
    tok_ids = {w: i for i, w in enumerate(token_table)}
    T = len(token_table)
    text_tok_flat = np.array(
        [tok_ids[w] for tt in texts_sorted for w in tt], dtype=np.int64)
    text_lens = np.array([len(tt) for tt in texts_sorted], dtype=np.int64)
    text_off = np.zeros(len(texts_sorted) + 1, dtype=np.int64)
    np.cumsum(text_lens, out=text_off[1:])

    tmask = text >= 0
    if tmask.any() and T:
        tids = text[tmask].astype(np.int64)
        lens = text_lens[tids]
        total = int(lens.sum())
        cum = np.zeros(len(lens) + 1, dtype=np.int64)
        np.cumsum(lens, out=cum[1:])
        gather = (np.arange(total, dtype=np.int64)
                  - np.repeat(cum[:-1], lens)
                  + np.repeat(text_off[tids], lens))
        tok_rep = text_tok_flat[gather]
        cid_rep = np.repeat(cid[tmask].astype(np.int64), lens)
        pairs, counts = np.unique(cid_rep * T + tok_rep, return_counts=True)
        ctok_cids = pairs // T
        ctok_flat = (pairs % T).astype(np.int64)
        ctok_counts = counts.astype(np.int64)
        ctok_offsets = np.zeros(C + 1, dtype=np.int64)
        np.cumsum(np.bincount(ctok_cids, minlength=C), out=ctok_offsets[1:])
        token_totals = np.zeros(C, dtype=np.int64)
        np.add.at(token_totals, ctok_cids, ctok_counts)
    else:
        ctok_flat = np.empty(0, dtype=np.int64)
        ctok_counts = np.empty(0, dtype=np.int64)
        ctok_offsets = np.zeros(C + 1, dtype=np.int64)
        token_totals = np.zeros(C, dtype=np.int64)

    return CommunityIndex({
        "names": names,
        "displays": displays,
        "user_names": user_names,
        "url_table": urls_sorted,
        "token_table": token_table,
        "text_table": texts_sorted,
        "ev_uid": uid, "ev_cid": cid, "ev_ts": ts,
        "ev_kind": kind, "ev_link": link, "ev_text": text,
        "comm_offsets": comm_offsets,
        "n_posters": n_posters,
        "link_flat": link_flat, "link_offsets": link_offsets,
        "ctok_flat": ctok_flat, "ctok_counts": ctok_counts,
        "ctok_offsets": ctok_offsets, "token_totals": token_totals,
        "uc_keys": uc_keys, "uc_starts": uc_starts,
        "uc_ends": uc_ends, "uc_ts": uc_ts,
    })


def load_corpus(source, fmt: str = "jsonl", exclude_users: Iterable[str] = (),
                chunk_bytes: int = 1 << 22) -> tuple[CommunityIndex, ParseStats]:
    """Ingest a corpus file (or binary stream) into a CommunityIndex.

    JSONL goes through the streaming scanner (compiled when available);
    CSV rows are validated in Python and fed to the same interning sink.
    Returns (index, stats); stats counts pre-deduplication records.
    """
    scanner = kernels.Scanner(decode_json_line, normalize_url)
    if fmt == "jsonl":
        if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
            fh: IO[bytes] = open(source, "rb")
            own = True
        else:
            fh = source
            own = False
        try:
            while True:
                chunk = fh.read(chunk_bytes)
                if not chunk:
                    break
                scanner.feed(chunk)
            scanner.close()
        finally:
            if own:
                fh.close()
    elif fmt == "csv":
        import csv

        if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
            tfh = open(source, "r", newline="", encoding="utf-8", errors="replace")
            own = True
        else:
            tfh = source
            own = False
        try:
            reader = csv.DictReader(tfh)
            while True:
                try:
                    row = next(reader)
                except StopIteration:
                    break
                except csv.Error:
                    scanner.skipped += 1
                    continue
                parsed = _decode_csv_row(row)
                if parsed is None:
                    scanner.skipped += 1
                else:
                    scanner.add_parsed(parsed)
        finally:
            if own:
                tfh.close()
    else:
        raise ValueError(f"unknown format {fmt!r}; expected 'jsonl' or 'csv'")

    cols = scanner.result()
    stats = ParseStats(records=len(cols["uid"]), skipped=cols["skipped"])
    return finalize_columns(cols, exclude_users), stats


def eligible_communities(index: CommunityIndex, min_posters: int = 300) -> list[str]:
    """Names of communities with at least `min_posters` distinct posters."""
    return [index.names[c] for c in range(index.n_communities)
            if index.n_posters[c] >= min_posters]
