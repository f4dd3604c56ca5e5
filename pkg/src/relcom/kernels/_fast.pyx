# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.

Three inner loops dominate pipeline runtime: scanning JSON Lines event
streams, counting events inside half-open time windows, and evaluating
similarity metrics over all community pairs. Each has a drop-in
pure-Python twin in `_fallback`; `relcom.kernels` picks one at import.
"""

from libc.math cimport log2

import numpy as np

cimport numpy as cnp

cnp.import_array()


# ---------------------------------------------------------------- searching

cdef inline Py_ssize_t _bisect_left(const cnp.int64_t* a, Py_ssize_t lo,
                                    Py_ssize_t hi, cnp.int64_t x) nogil:
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def window_counts(cnp.int64_t[::1] values not None,
                  cnp.int64_t[::1] starts not None,
                  cnp.int64_t[::1] ends not None,
                  cnp.int64_t[::1] lows not None,
                  cnp.int64_t[::1] highs not None):
    """For each query i, count values[starts[i]:ends[i]] in [lows[i], highs[i]).

    Each slice must be sorted ascending. Slices may be empty.
    """
    cdef Py_ssize_t m = starts.shape[0]
    out = np.zeros(m, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    cdef const cnp.int64_t* v = &values[0] if values.shape[0] else NULL
    cdef Py_ssize_t i, lo, hi
    with nogil:
        for i in range(m):
            lo = starts[i]
            hi = ends[i]
            if lo >= hi:
                continue
            o[i] = (_bisect_left(v, lo, hi, highs[i])
                    - _bisect_left(v, lo, hi, lows[i]))
    return out


# ------------------------------------------------------- pairwise similarity

def js_pairs_chunk(const double[:, ::1] theta not None,
                   Py_ssize_t row_lo, Py_ssize_t row_hi,
                   double[::1] out not None):
    """Jensen-Shannon divergence (base 2) for all row pairs (i, j), i < j.

    Writes into `out` at condensed positions i*(2n-i-1)/2 + (j-i-1) for
    rows in [row_lo, row_hi). `out` covers the full n*(n-1)/2 grid.
    """
    cdef Py_ssize_t n = theta.shape[0]
    cdef Py_ssize_t d = theta.shape[1]
    cdef Py_ssize_t i, j, k, base
    cdef double p, q, m, acc
    with nogil:
        for i in range(row_lo, row_hi):
            base = i * (2 * n - i - 1) // 2
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(d):
                    p = theta[i, k]
                    q = theta[j, k]
                    m = 0.5 * (p + q)
                    if p > 0.0:
                        acc += p * log2(p / m)
                    if q > 0.0:
                        acc += q * log2(q / m)
                out[base + (j - i - 1)] = 0.5 * acc


def js_sparse_pairs_chunk(cnp.int64_t[::1] tok_flat not None,
                          cnp.int64_t[::1] cnt_flat not None,
                          cnp.int64_t[::1] offsets not None,
                          cnp.int64_t[::1] totals not None,
                          long long vocab,
                          Py_ssize_t row_lo, Py_ssize_t row_hi,
                          double[::1] out not None):
    """JS divergence between add-one-smoothed sparse count distributions.

    Distribution i assigns (c+1)/(totals[i]+vocab) to a token with count c
    in tok_flat/cnt_flat[offsets[i]:offsets[i+1]] (token ids sorted) and
    1/(totals[i]+vocab) to each of the remaining vocab tokens. Layout of
    `out` matches js_pairs_chunk.
    """
    cdef Py_ssize_t n = offsets.shape[0] - 1
    cdef Py_ssize_t i, j, base, a, b, ea, eb
    cdef long long uni
    cdef double di, dj, p0, q0, m0, tail_term, acc, p, q, m
    cdef const cnp.int64_t* tf = &tok_flat[0] if tok_flat.shape[0] else NULL
    cdef const cnp.int64_t* cf = &cnt_flat[0] if cnt_flat.shape[0] else NULL
    with nogil:
        for i in range(row_lo, row_hi):
            base = i * (2 * n - i - 1) // 2
            di = <double>(totals[i] + vocab)
            p0 = 1.0 / di
            for j in range(i + 1, n):
                dj = <double>(totals[j] + vocab)
                q0 = 1.0 / dj
                m0 = 0.5 * (p0 + q0)
                tail_term = 0.5 * (p0 * log2(p0 / m0) + q0 * log2(q0 / m0))
                acc = 0.0
                uni = 0
                a = offsets[i]
                ea = offsets[i + 1]
                b = offsets[j]
                eb = offsets[j + 1]
                while a < ea or b < eb:
                    if b >= eb or (a < ea and tf[a] < tf[b]):
                        p = (cf[a] + 1) / di
                        q = q0
                        a += 1
                    elif a >= ea or tf[b] < tf[a]:
                        p = p0
                        q = (cf[b] + 1) / dj
                        b += 1
                    else:
                        p = (cf[a] + 1) / di
                        q = (cf[b] + 1) / dj
                        a += 1
                        b += 1
                    m = 0.5 * (p + q)
                    acc += 0.5 * (p * log2(p / m) + q * log2(q / m))
                    uni += 1
                acc += (vocab - uni) * tail_term
                out[base + (j - i - 1)] = acc


def jaccard_pairs_chunk(cnp.int64_t[::1] flat not None,
                        cnp.int64_t[::1] offsets not None,
                        Py_ssize_t row_lo, Py_ssize_t row_hi,
                        double[::1] out not None):
    """Jaccard similarity of element-id sets for all pairs (i, j), i < j.

    Set i is flat[offsets[i]:offsets[i+1]], sorted unique. Two empty sets
    score 0. Layout of `out` matches js_pairs_chunk.
    """
    cdef Py_ssize_t n = offsets.shape[0] - 1
    cdef Py_ssize_t i, j, base, a, b, ea, eb
    cdef cnp.int64_t inter, la, lb
    cdef const cnp.int64_t* f = &flat[0] if flat.shape[0] else NULL
    with nogil:
        for i in range(row_lo, row_hi):
            base = i * (2 * n - i - 1) // 2
            for j in range(i + 1, n):
                a = offsets[i]
                ea = offsets[i + 1]
                b = offsets[j]
                eb = offsets[j + 1]
                la = ea - a
                lb = eb - b
                inter = 0
                while a < ea and b < eb:
                    if f[a] < f[b]:
                        a += 1
                    elif f[b] < f[a]:
                        b += 1
                    else:
                        inter += 1
                        a += 1
                        b += 1
                if la + lb == inter:  # both empty
                    out[base + (j - i - 1)] = 0.0
                else:
                    out[base + (j - i - 1)] = inter / <double>(la + lb - inter)


# ------------------------------------------------------------ JSONL scanner

cdef inline bint _utf8_ok(const unsigned char* s, Py_ssize_t lo,
                          Py_ssize_t hi) nogil:
    """Strict UTF-8 check (rejects overlongs and surrogates, like str.decode)."""
    cdef Py_ssize_t i = lo
    cdef unsigned int c, c2
    while i < hi:
        c = s[i]
        if c < 0x80:
            i += 1
            continue
        if c < 0xC2:
            return False
        if c < 0xE0:
            if i + 1 >= hi or (s[i + 1] & 0xC0) != 0x80:
                return False
            i += 2
            continue
        if c < 0xF0:
            if i + 2 >= hi:
                return False
            c2 = s[i + 1]
            if (c2 & 0xC0) != 0x80 or (s[i + 2] & 0xC0) != 0x80:
                return False
            if c == 0xE0 and c2 < 0xA0:
                return False
            if c == 0xED and c2 >= 0xA0:
                return False
            i += 3
            continue
        if c < 0xF5:
            if i + 3 >= hi:
                return False
            c2 = s[i + 1]
            if ((c2 & 0xC0) != 0x80 or (s[i + 2] & 0xC0) != 0x80
                    or (s[i + 3] & 0xC0) != 0x80):
                return False
            if c == 0xF0 and c2 < 0x90:
                return False
            if c == 0xF4 and c2 >= 0x90:
                return False
            i += 4
            continue
        return False
    return True


cdef cnp.ndarray _grown(cnp.ndarray old, Py_ssize_t n, Py_ssize_t cap):
    new = np.empty(cap, dtype=old.dtype)
    new[:n] = old[:n]
    return new


cdef class FastScanner:
    """Streaming schema-aware scanner for corpus JSON Lines.

    Hand-parses the common case (flat object, string/int values, no escape
    sequences, ASCII community names) and falls back to a Python callback
    for anything else, so behaviour matches the stdlib-json path exactly.
    Emits interned integer columns; see `result`.
    """

    cdef object decode_line        # str -> parsed tuple | None
    cdef object normalize_url      # str -> str | None
    cdef dict users, comm_raw, comm_norm, urls_raw, urls_norm, texts
    cdef list user_table, comm_table, display_table, url_table, text_table
    cdef cnp.ndarray uid_a, cid_a, ts_a, kind_a, link_a, text_a
    cdef cnp.int32_t* uid_p
    cdef cnp.int32_t* cid_p
    cdef cnp.int64_t* ts_p
    cdef cnp.int8_t* kind_p
    cdef cnp.int32_t* link_p
    cdef cnp.int32_t* text_p
    cdef Py_ssize_t n, cap
    cdef public long long skipped
    cdef bytes tail
    cdef bint started

    # scratch for the last parsed line
    cdef Py_ssize_t ulo, uhi, clo, chi, vlo, vhi, tlo, thi
    cdef long long ts_val
    cdef int kind_val
    cdef bint has_url, has_text

    def __init__(self, decode_line, normalize_url):
        self.decode_line = decode_line
        self.normalize_url = normalize_url
        self.users = {}
        self.comm_raw = {}
        self.comm_norm = {}
        self.urls_raw = {}
        self.urls_norm = {}
        self.texts = {}
        self.user_table = []
        self.comm_table = []
        self.display_table = []
        self.url_table = []
        self.text_table = []
        self.n = 0
        self.cap = 1 << 15
        self.skipped = 0
        self.tail = b""
        self.started = False
        self.uid_a = np.empty(self.cap, dtype=np.int32)
        self.cid_a = np.empty(self.cap, dtype=np.int32)
        self.ts_a = np.empty(self.cap, dtype=np.int64)
        self.kind_a = np.empty(self.cap, dtype=np.int8)
        self.link_a = np.empty(self.cap, dtype=np.int32)
        self.text_a = np.empty(self.cap, dtype=np.int32)
        self._rebind()

    cdef void _rebind(self):
        self.uid_p = <cnp.int32_t*> cnp.PyArray_DATA(self.uid_a)
        self.cid_p = <cnp.int32_t*> cnp.PyArray_DATA(self.cid_a)
        self.ts_p = <cnp.int64_t*> cnp.PyArray_DATA(self.ts_a)
        self.kind_p = <cnp.int8_t*> cnp.PyArray_DATA(self.kind_a)
        self.link_p = <cnp.int32_t*> cnp.PyArray_DATA(self.link_a)
        self.text_p = <cnp.int32_t*> cnp.PyArray_DATA(self.text_a)

    cdef void _grow(self):
        self.cap *= 2
        self.uid_a = _grown(self.uid_a, self.n, self.cap)
        self.cid_a = _grown(self.cid_a, self.n, self.cap)
        self.ts_a = _grown(self.ts_a, self.n, self.cap)
        self.kind_a = _grown(self.kind_a, self.n, self.cap)
        self.link_a = _grown(self.link_a, self.n, self.cap)
        self.text_a = _grown(self.text_a, self.n, self.cap)
        self._rebind()

    cdef inline void _emit(self, int uid, int cid, long long ts, int kind,
                           int link, int text):
        if self.n >= self.cap:
            self._grow()
        self.uid_p[self.n] = uid
        self.cid_p[self.n] = cid
        self.ts_p[self.n] = ts
        self.kind_p[self.n] = kind
        self.link_p[self.n] = link
        self.text_p[self.n] = text
        self.n += 1

    # -- interning helpers (shared by fast and slow line paths) --

    cdef int _intern_user(self, bytes b):
        v = self.users.get(b)
        if v is None:
            v = len(self.user_table)
            self.users[b] = v
            self.user_table.append(b)
        return v

    cdef int _intern_comm(self, bytes raw, bytes norm):
        # norm may be None when raw is known-lowercase ASCII (fast path
        # passes the lowered copy explicitly).
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

    cdef int _intern_url(self, bytes raw):
        # returns link id or -1 when the url normalizes to nothing
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

    cdef int _intern_text(self, bytes raw):
        v = self.texts.get(raw)
        if v is None:
            v = len(self.text_table)
            self.texts[raw] = v
            self.text_table.append(raw)
        return v

    # -- line parsing --

    cdef int _parse(self, const unsigned char* s, Py_ssize_t nbytes):
        """0 = parsed, 1 = malformed, 2 = needs slow path."""
        cdef Py_ssize_t i = 0, n = nbytes
        cdef Py_ssize_t klo, khi, wlo, whi
        cdef unsigned char c
        cdef long long tv
        cdef bint neg, ts_seen = False, is_str
        self.ulo = -1
        self.clo = -1
        self.has_url = False
        self.has_text = False
        self.kind_val = -1

        while n > i and (s[n - 1] == 32 or s[n - 1] == 9 or s[n - 1] == 13):
            n -= 1
        while i < n and (s[i] == 32 or s[i] == 9 or s[i] == 13):
            i += 1
        if i >= n or s[i] != b'{':
            return 1
        i += 1
        while True:
            while i < n and (s[i] == 32 or s[i] == 9 or s[i] == 13):
                i += 1
            if i < n and s[i] == b'}':
                i += 1
                break
            if i >= n or s[i] != b'"':
                return 1
            i += 1
            klo = i
            while i < n and s[i] != b'"':
                if s[i] == b'\\' or s[i] < 32:
                    return 2
                i += 1
            if i >= n:
                return 1
            khi = i
            i += 1
            while i < n and (s[i] == 32 or s[i] == 9 or s[i] == 13):
                i += 1
            if i >= n or s[i] != b':':
                return 1
            i += 1
            while i < n and (s[i] == 32 or s[i] == 9 or s[i] == 13):
                i += 1
            if i >= n:
                return 1
            c = s[i]
            is_str = False
            wlo = -1
            whi = -1
            if c == b'"':
                i += 1
                wlo = i
                while i < n and s[i] != b'"':
                    if s[i] == b'\\' or s[i] < 32:
                        return 2
                    i += 1
                if i >= n:
                    return 1
                whi = i
                i += 1
                is_str = True
            elif c == b'-' or (48 <= c <= 57):
                neg = c == b'-'
                if neg:
                    i += 1
                    if i >= n or not (48 <= s[i] <= 57):
                        return 1
                if s[i] == 48 and i + 1 < n and 48 <= s[i + 1] <= 57:
                    return 1  # leading zero: invalid JSON number
                tv = 0
                while i < n and 48 <= s[i] <= 57:
                    tv = tv * 10 + (s[i] - 48)
                    if tv > (<long long>1) << 62:
                        return 2
                    i += 1
                if i < n and (s[i] == b'.' or s[i] == b'e' or s[i] == b'E'):
                    return 2
                if neg:
                    tv = -tv
            elif c == b'n' and i + 4 <= n and s[i+1] == b'u' and s[i+2] == b'l' and s[i+3] == b'l':
                i += 4
            else:
                return 2  # bool / nested value: let json.loads decide

            # Dispatch on key. Type surprises defer to the json path (2)
            # so last-duplicate-wins semantics match json.loads exactly.
            if khi - klo == 4 and s[klo] == b'u' and s[klo+1] == b's' and s[klo+2] == b'e' and s[klo+3] == b'r':
                if is_str:
                    self.ulo = wlo
                    self.uhi = whi
                elif c == b'n':
                    self.ulo = -1
                else:
                    return 2
            elif khi - klo == 9 and s[klo] == b'c' and s[klo+1] == b'o' and s[klo+2] == b'm' and s[klo+3] == b'm' and s[klo+4] == b'u' and s[klo+5] == b'n' and s[klo+6] == b'i' and s[klo+7] == b't' and s[klo+8] == b'y':
                if is_str:
                    self.clo = wlo
                    self.chi = whi
                elif c == b'n':
                    self.clo = -1
                else:
                    return 2
            elif khi - klo == 2 and s[klo] == b't' and s[klo+1] == b's':
                if is_str:
                    return 2
                if c == b'n':
                    ts_seen = False
                else:
                    self.ts_val = tv
                    ts_seen = True
            elif khi - klo == 4 and s[klo] == b'k' and s[klo+1] == b'i' and s[klo+2] == b'n' and s[klo+3] == b'd':
                if not is_str:
                    if c == b'n':
                        self.kind_val = -1
                    else:
                        return 2
                elif whi - wlo == 4 and s[wlo] == b'p' and s[wlo+1] == b'o' and s[wlo+2] == b's' and s[wlo+3] == b't':
                    self.kind_val = 0
                elif whi - wlo == 7 and s[wlo] == b'c' and s[wlo+1] == b'o' and s[wlo+2] == b'm' and s[wlo+3] == b'm' and s[wlo+4] == b'e' and s[wlo+5] == b'n' and s[wlo+6] == b't':
                    self.kind_val = 1
                else:
                    return 2
            elif khi - klo == 3 and s[klo] == b'u' and s[klo+1] == b'r' and s[klo+2] == b'l':
                if is_str:
                    if whi > wlo:
                        self.vlo = wlo
                        self.vhi = whi
                        self.has_url = True
                    else:
                        self.has_url = False
                elif c == b'n':
                    self.has_url = False
                else:
                    return 2
            elif khi - klo == 4 and s[klo] == b't' and s[klo+1] == b'e' and s[klo+2] == b'x' and s[klo+3] == b't':
                if is_str:
                    if whi > wlo:
                        self.tlo = wlo
                        self.thi = whi
                        self.has_text = True
                    else:
                        self.has_text = False
                elif c == b'n':
                    self.has_text = False
                else:
                    return 2
            # unknown keys: value already consumed, ignore

            while i < n and (s[i] == 32 or s[i] == 9):
                i += 1
            if i < n and s[i] == b',':
                i += 1
                continue
            if i < n and s[i] == b'}':
                i += 1
                break
            return 1

        while i < n and (s[i] == 32 or s[i] == 9):
            i += 1
        if i != n:
            return 1

        if self.ulo == -1 or self.clo == -1 or not ts_seen or self.kind_val < 0:
            return 1
        if self.uhi == self.ulo or self.chi == self.clo:
            return 1
        if self.ts_val < 0:
            return 1
        if self.has_url and self.kind_val != 0:
            return 1
        for i in range(self.clo, self.chi):
            if s[i] >= 0x80:
                return 2  # community needs unicode-aware lowercasing
        if not _utf8_ok(s, self.ulo, self.uhi):
            return 2
        if self.has_url and not _utf8_ok(s, self.vlo, self.vhi):
            return 2
        if self.has_text and not _utf8_ok(s, self.tlo, self.thi):
            return 2
        return 0

    cdef void _take_fast(self, const unsigned char* s):
        cdef bytes user_b = s[self.ulo:self.uhi]
        cdef bytes raw_b = s[self.clo:self.chi]
        cdef bytes norm_b
        cdef Py_ssize_t i
        cdef bint needs_lower = False
        cdef int uid, cid, lid, tid
        for i in range(self.clo, self.chi):
            if 65 <= s[i] <= 90:
                needs_lower = True
                break
        norm_b = raw_b.lower() if needs_lower else raw_b
        uid = self._intern_user(user_b)
        cid = self._intern_comm(raw_b, norm_b)
        lid = self._intern_url(s[self.vlo:self.vhi]) if self.has_url else -1
        tid = self._intern_text(s[self.tlo:self.thi]) if self.has_text else -1
        self._emit(uid, cid, self.ts_val, self.kind_val, lid, tid)

    cpdef add_parsed(self, parsed):
        """Intern and emit a (user, community, ts, kind, url, text) tuple."""
        user, comm, ts, kind, url, text = parsed
        cdef bytes raw_b = comm.encode("utf-8")
        cdef bytes norm_b = comm.lower().encode("utf-8")
        cdef int uid = self._intern_user(user.encode("utf-8"))
        cdef int cid = self._intern_comm(raw_b, norm_b)
        cdef int lid = self._intern_url(url.encode("utf-8")) if url else -1
        cdef int tid = self._intern_text(text.encode("utf-8")) if text else -1
        self._emit(uid, cid, ts, kind, lid, tid)

    cdef void _line(self, const unsigned char* s, Py_ssize_t n):
        cdef Py_ssize_t k = 0
        while k < n and (s[k] == 32 or s[k] == 9 or s[k] == 13):
            k += 1
        if k == n:
            return  # blank line: not a record, not an error
        cdef int st = self._parse(s, n)
        if st == 0:
            self._take_fast(s)
            return
        if st == 2:
            try:
                text = s[:n].decode("utf-8")
            except UnicodeDecodeError:
                self.skipped += 1
                return
            parsed = self.decode_line(text)
            if parsed is None:
                self.skipped += 1
            else:
                self.add_parsed(parsed)
            return
        self.skipped += 1

    def feed(self, data):
        cdef bytes buf
        if self.tail:
            buf = self.tail + data
        else:
            buf = bytes(data)
        if not self.started:
            if len(buf) < 3 and buf.find(b"\n") < 0:
                self.tail = buf  # a split BOM could still be arriving
                return
            if buf.startswith(b"\xef\xbb\xbf"):
                buf = buf[3:]
            self.started = True
        cdef Py_ssize_t end = len(buf)
        cdef Py_ssize_t cut = buf.rfind(b"\n") + 1
        if cut == 0:
            self.tail = buf
            return
        self.tail = buf[cut:]
        cdef const char* p0 = buf
        cdef const unsigned char* p = <const unsigned char*> p0
        cdef Py_ssize_t pos = 0, nl
        while pos < cut:
            nl = buf.find(b"\n", pos, cut)
            self._line(p + pos, nl - pos)
            pos = nl + 1

    def close(self):
        cdef bytes last = self.tail
        cdef const char* p0
        if last:
            p0 = last
            self._line(<const unsigned char*> p0, len(last))
            self.tail = b""

    def result(self):
        return {
            "uid": self.uid_a[: self.n].copy(),
            "cid": self.cid_a[: self.n].copy(),
            "ts": self.ts_a[: self.n].copy(),
            "kind": self.kind_a[: self.n].copy(),
            "link": self.link_a[: self.n].copy(),
            "text": self.text_a[: self.n].copy(),
            "users": list(self.user_table),
            "comms": list(self.comm_table),
            "displays": list(self.display_table),
            "urls": list(self.url_table),
            "texts": list(self.text_table),
            "skipped": int(self.skipped),
        }
