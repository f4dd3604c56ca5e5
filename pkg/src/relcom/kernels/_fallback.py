"""Pure NumPy/Python twins of the compiled kernels.

Kept behaviourally identical to `_fast` (same function signatures, same
outputs, same malformed-line accounting) so the two backends are
interchangeable; the test suite asserts parity on shared inputs.
"""

from __future__ import annotations

import numpy as np


def window_counts(values: np.ndarray, starts: np.ndarray, ends: np.ndarray,
                  lows: np.ndarray, highs: np.ndarray) -> np.ndarray:
    """For each query i, count values[starts[i]:ends[i]] in [lows[i], highs[i]).

    Each slice must be sorted ascending. Slices may be empty.
    """
    m = len(starts)
    out = np.zeros(m, dtype=np.int64)
    for i in range(m):
        lo, hi = starts[i], ends[i]
        if lo >= hi:
            continue
        sl = values[lo:hi]
        out[i] = np.searchsorted(sl, highs[i], "left") - np.searchsorted(sl, lows[i], "left")
    return out


def js_pairs_chunk(theta: np.ndarray, row_lo: int, row_hi: int,
                   out: np.ndarray) -> None:
    """Jensen-Shannon divergence (base 2) for all row pairs (i, j), i < j.

    Writes into `out` at condensed positions i*(2n-i-1)/2 + (j-i-1) for
    rows in [row_lo, row_hi). `out` covers the full n*(n-1)/2 grid.
    """
    n = theta.shape[0]
    for i in range(row_lo, row_hi):
        if i + 1 >= n:
            continue
        base = i * (2 * n - i - 1) // 2
        p = theta[i]
        q = theta[i + 1:]
        m = 0.5 * (p + q)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = (np.where(p > 0.0, p * np.log2(np.where(p > 0.0, p, 1.0) / m), 0.0)
                     + np.where(q > 0.0, q * np.log2(np.where(q > 0.0, q, 1.0) / m), 0.0))
        out[base:base + (n - i - 1)] = 0.5 * terms.sum(axis=1)


def _js_terms(p: np.ndarray, q: np.ndarray) -> float:
    m = 0.5 * (p + q)
    return float(0.5 * (np.sum(p * np.log2(p / m)) + np.sum(q * np.log2(q / m))))


def js_sparse_pairs_chunk(tok_flat: np.ndarray, cnt_flat: np.ndarray,
                          offsets: np.ndarray, totals: np.ndarray,
                          vocab: int, row_lo: int, row_hi: int,
                          out: np.ndarray) -> None:
    """JS divergence between add-one-smoothed sparse count distributions.

    Distribution i assigns (c+1)/(totals[i]+vocab) to a token with count c
    in tok_flat/cnt_flat[offsets[i]:offsets[i+1]] (token ids sorted) and
    1/(totals[i]+vocab) to each of the remaining vocab tokens. Layout of
    `out` matches js_pairs_chunk.
    """
    n = len(offsets) - 1
    toks = [tok_flat[offsets[i]:offsets[i + 1]] for i in range(n)]
    cnts = [cnt_flat[offsets[i]:offsets[i + 1]] for i in range(n)]
    for i in range(row_lo, row_hi):
        base = i * (2 * n - i - 1) // 2
        di = float(totals[i] + vocab)
        p0 = 1.0 / di
        for j in range(i + 1, n):
            dj = float(totals[j] + vocab)
            q0 = 1.0 / dj
            common, ia, ja = np.intersect1d(toks[i], toks[j],
                                            assume_unique=True,
                                            return_indices=True)
            only_i = np.ones(len(toks[i]), dtype=bool)
            only_i[ia] = False
            only_j = np.ones(len(toks[j]), dtype=bool)
            only_j[ja] = False
            acc = _js_terms((cnts[i][ia] + 1) / di, (cnts[j][ja] + 1) / dj)
            acc += _js_terms((cnts[i][only_i] + 1) / di,
                             np.full(int(only_i.sum()), q0))
            acc += _js_terms(np.full(int(only_j.sum()), p0),
                             (cnts[j][only_j] + 1) / dj)
            union = len(toks[i]) + len(toks[j]) - len(common)
            m0 = 0.5 * (p0 + q0)
            acc += (vocab - union) * 0.5 * (p0 * np.log2(p0 / m0)
                                            + q0 * np.log2(q0 / m0))
            out[base + (j - i - 1)] = acc


def jaccard_pairs_chunk(flat: np.ndarray, offsets: np.ndarray, row_lo: int,
                        row_hi: int, out: np.ndarray) -> None:
    """Jaccard similarity of element-id sets for all pairs (i, j), i < j.

    Set i is flat[offsets[i]:offsets[i+1]], sorted unique. Two empty sets
    score 0. Layout of `out` matches js_pairs_chunk.
    """
    n = len(offsets) - 1
    sets = [frozenset(flat[offsets[i]:offsets[i + 1]].tolist()) for i in range(n)]
    sizes = [len(s) for s in sets]
    for i in range(row_lo, row_hi):
        base = i * (2 * n - i - 1) // 2
        si, li = sets[i], sizes[i]
        for j in range(i + 1, n):
            inter = len(si & sets[j])
            union = li + sizes[j] - inter
            out[base + (j - i - 1)] = inter / union if union else 0.0


class PyScanner:
    """Streaming scanner for corpus JSON Lines, stdlib-json based.

    Same interface and column output as the compiled FastScanner; every
    line goes through the `decode_line` callback.
    """

    def __init__(self, decode_line, normalize_url):
        self.decode_line = decode_line
        self.normalize_url = normalize_url
        self.users: dict[bytes, int] = {}
        self.comm_raw: dict[bytes, int] = {}
        self.comm_norm: dict[bytes, int] = {}
        self.urls_raw: dict[bytes, int] = {}
        self.urls_norm: dict[str, int] = {}
        self.texts: dict[bytes, int] = {}
        self.user_table: list[bytes] = []
        self.comm_table: list[bytes] = []
        self.display_table: list[bytes] = []
        self.url_table: list[str] = []
        self.text_table: list[bytes] = []
        self.rows: list[tuple[int, int, int, int, int, int]] = []
        self.skipped = 0
        self.tail = b""
        self.started = False

    def add_parsed(self, parsed) -> None:
        """Intern and emit a (user, community, ts, kind, url, text) tuple."""
        user, comm, ts, kind, url, text = parsed
        uid = self._intern_user(user.encode("utf-8"))
        cid = self._intern_comm(comm.encode("utf-8"), comm.lower().encode("utf-8"))
        lid = self._intern_url(url.encode("utf-8")) if url else -1
        tid = self._intern_text(text.encode("utf-8")) if text else -1
        self.rows.append((uid, cid, ts, kind, lid, tid))

    def _intern_user(self, b: bytes) -> int:
        v = self.users.get(b)
        if v is None:
            v = len(self.user_table)
            self.users[b] = v
            self.user_table.append(b)
        return v

    def _intern_comm(self, raw: bytes, norm: bytes) -> int:
        v = self.comm_raw.get(raw)
        if v is not None:
            return v
        cid = self.comm_norm.get(norm)
        if cid is None:
            cid = len(self.comm_table)
            self.comm_norm[norm] = cid
            self.comm_table.append(norm)
            self.display_table.append(raw)
        elif raw < self.display_table[cid]:
            self.display_table[cid] = raw
        self.comm_raw[raw] = cid
        return cid

    def _intern_url(self, raw: bytes) -> int:
        v = self.urls_raw.get(raw)
        if v is not None:
            return v
        try:
            norm = self.normalize_url(raw.decode("utf-8"))
        except UnicodeDecodeError:
            norm = None
        if norm is None:
            lid = -1
        else:
            lid = self.urls_norm.get(norm)
            if lid is None:
                lid = len(self.url_table)
                self.urls_norm[norm] = lid
                self.url_table.append(norm)
        self.urls_raw[raw] = lid
        return lid

    def _intern_text(self, raw: bytes) -> int:
        v = self.texts.get(raw)
        if v is None:
            v = len(self.text_table)
            self.texts[raw] = v
            self.text_table.append(raw)
        return v

    def _line(self, raw: bytes) -> None:
        if not raw.strip(b" \t\r"):
            return  # blank line: not a record, not an error
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            self.skipped += 1
            return
        parsed = self.decode_line(text)
        if parsed is None:
            self.skipped += 1
        else:
            self.add_parsed(parsed)

    def feed(self, data: bytes) -> None:
        buf = self.tail + bytes(data) if self.tail else bytes(data)
        if not self.started:
            if len(buf) < 3 and b"\n" not in buf:
                self.tail = buf  # a split BOM could still be arriving
                return
            if buf.startswith(b"\xef\xbb\xbf"):
                buf = buf[3:]
            self.started = True
        cut = buf.rfind(b"\n") + 1
        if cut == 0:
            self.tail = buf
            return
        self.tail = buf[cut:]
        for raw in buf[:cut].split(b"\n")[:-1]:
            self._line(raw)

    def close(self) -> None:
        if self.tail:
            self._line(self.tail)
            self.tail = b""

    def result(self) -> dict:
        n = len(self.rows)
        cols = {
            "uid": np.empty(n, dtype=np.int32),
            "cid": np.empty(n, dtype=np.int32),
            "ts": np.empty(n, dtype=np.int64),
            "kind": np.empty(n, dtype=np.int8),
            "link": np.empty(n, dtype=np.int32),
            "text": np.empty(n, dtype=np.int32),
        }
        for i, row in enumerate(self.rows):
            (cols["uid"][i], cols["cid"][i], cols["ts"][i],
             cols["kind"][i], cols["link"][i], cols["text"][i]) = row
        cols["users"] = list(self.user_table)
        cols["comms"] = list(self.comm_table)
        cols["displays"] = list(self.display_table)
        cols["urls"] = list(self.url_table)
        cols["texts"] = list(self.text_table)
        cols["skipped"] = self.skipped
        return cols
