"""Compare the compiled kernels against the pure-Python fallback.

Run from the repository root after building the extension:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --events 2000000 --repeat 5

Each line reports the best-of-N wall time per backend and the speedup.
"""

from __future__ import annotations

import argparse
import os
import tempfile
import time

import numpy as np

from relcom import synth
from relcom.corpus import decode_json_line, finalize_columns, normalize_url
from relcom.kernels import _fallback, condensed_size

try:
    from relcom.kernels import _fast
except ImportError:  # pragma: no cover - exercised only if build is missing
    _fast = None


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def row(name: str, fast_s: float | None, slow_s: float) -> None:
    if fast_s is None:
        print(f"{name:<33} compiled: (not built)   fallback: {slow_s:8.3f}s")
        return
    print(f"{name:<33} compiled: {fast_s:8.3f}s   fallback: {slow_s:8.3f}s"
          f"   speedup: {slow_s / fast_s:5.1f}x")


def bench_scanner(blob: bytes, repeat: int) -> None:
    def scan(mod):
        def run():
            sc = mod.FastScanner(decode_json_line, normalize_url) \
                if mod is _fast else mod.PyScanner(decode_json_line,
                                                   normalize_url)
            for i in range(0, len(blob), 1 << 20):
                sc.feed(blob[i:i + (1 << 20)])
            sc.close()
            return sc.result()
        return run

    slow = best_of(scan(_fallback), repeat)
    fast = best_of(scan(_fast), repeat) if _fast else None
    row("scanner (jsonl -> columns)", fast, slow)


def bench_window_counts(rng, repeat: int) -> None:
    n_slices, queries = 20_000, 200_000
    lens = rng.integers(1, 40, size=n_slices)
    offsets = np.zeros(n_slices + 1, dtype=np.int64)
    np.cumsum(lens, out=offsets[1:])
    values = np.sort(rng.integers(0, 1 << 30, size=int(offsets[-1])))
    pick = rng.integers(0, n_slices, size=queries)
    starts, ends = offsets[pick], offsets[pick + 1]
    lows = rng.integers(0, 1 << 30, size=queries)
    highs = lows + rng.integers(0, 1 << 20, size=queries)

    slow = best_of(lambda: _fallback.window_counts(values, starts, ends,
                                                   lows, highs), repeat)
    fast = best_of(lambda: _fast.window_counts(values, starts, ends,
                                               lows, highs),
                   repeat) if _fast else None
    row(f"window_counts ({queries // 1000}k queries)", fast, slow)


def bench_js_dense(rng, repeat: int) -> None:
    n, dim = 250, 200
    theta = rng.random((n, dim)) + 1e-9
    theta /= theta.sum(axis=1, keepdims=True)
    out = np.empty(condensed_size(n))

    slow = best_of(lambda: _fallback.js_pairs_chunk(theta, 0, n - 1, out),
                   repeat)
    fast = best_of(lambda: _fast.js_pairs_chunk(theta, 0, n - 1, out),
                   repeat) if _fast else None
    row(f"js_pairs_chunk ({n}x{dim})", fast, slow)


def bench_js_sparse(rng, repeat: int) -> None:
    n, vocab = 250, 5_000
    lens = rng.integers(5, 120, size=n)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(lens, out=offsets[1:])
    tok_flat = np.concatenate([
        np.sort(rng.choice(vocab, size=int(m), replace=False)) for m in lens
    ]).astype(np.int64)
    cnt_flat = rng.integers(1, 50, size=int(offsets[-1])).astype(np.int64)
    totals = np.array([cnt_flat[offsets[i]:offsets[i + 1]].sum()
                       for i in range(n)], dtype=np.int64)
    out = np.empty(condensed_size(n))

    slow = best_of(lambda: _fallback.js_sparse_pairs_chunk(
        tok_flat, cnt_flat, offsets, totals, vocab, 0, n - 1, out), repeat)
    fast = best_of(lambda: _fast.js_sparse_pairs_chunk(
        tok_flat, cnt_flat, offsets, totals, vocab, 0, n - 1, out),
        repeat) if _fast else None
    row(f"js_sparse_pairs_chunk ({n} rows)", fast, slow)


def bench_jaccard(rng, repeat: int) -> None:
    n, universe = 600, 20_000
    lens = rng.integers(0, 200, size=n)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(lens, out=offsets[1:])
    flat = np.concatenate([
        np.sort(rng.choice(universe, size=int(m), replace=False))
        for m in lens
    ]).astype(np.int64) if offsets[-1] else np.empty(0, dtype=np.int64)
    out = np.empty(condensed_size(n))

    slow = best_of(lambda: _fallback.jaccard_pairs_chunk(flat, offsets,
                                                         0, n - 1, out),
                   repeat)
    fast = best_of(lambda: _fast.jaccard_pairs_chunk(flat, offsets,
                                                     0, n - 1, out),
                   repeat) if _fast else None
    row(f"jaccard_pairs_chunk ({n} sets)", fast, slow)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, default=500_000,
                    help="corpus size for the scanner benchmark")
    ap.add_argument("--repeat", type=int, default=3,
                    help="repetitions per measurement (best is reported)")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    if _fast is None:
        print("note: compiled extension not importable; fallback only\n")

    with tempfile.TemporaryDirectory() as td:
        path = os.path.join(td, "bench.jsonl")
        synth.bulk_corpus(path, args.events, seed=args.seed)
        with open(path, "rb") as fh:
            blob = fh.read()
    print(f"scanner corpus: {args.events} events, "
          f"{len(blob) / 1e6:.0f} MB jsonl\n")

    bench_scanner(blob, args.repeat)
    bench_window_counts(rng, args.repeat)
    bench_js_dense(rng, args.repeat)
    bench_js_sparse(rng, args.repeat)
    bench_jaccard(rng, args.repeat)

    # end-to-end: scan + column finalization on the same corpus
    def ingest():
        sc = _fast.FastScanner(decode_json_line, normalize_url) if _fast \
            else _fallback.PyScanner(decode_json_line, normalize_url)
        for i in range(0, len(blob), 1 << 20):
            sc.feed(blob[i:i + (1 << 20)])
        sc.close()
        return finalize_columns(sc.result(), ())

    t0 = time.perf_counter()
    index = ingest()
    dt = time.perf_counter() - t0
    backend = "compiled" if _fast else "fallback"
    print(f"\nfull ingest+index ({backend}): {dt:.2f}s "
          f"({index.n_events / dt / 1e6:.2f}M events/s)")


if __name__ == "__main__":
    main()
