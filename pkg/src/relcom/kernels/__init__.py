"""Kernel backend selection.

Imports the compiled extension when available, otherwise the pure-Python
fallback. Set RELCOM_FORCE_FALLBACK=1 to skip the extension even when it
is installed (useful for debugging and for benchmarking the two sides).
"""

from __future__ import annotations

import os

_force = os.environ.get("RELCOM_FORCE_FALLBACK", "").strip() not in ("", "0")

if _force:
    _impl = None
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = None

if _impl is not None:
    BACKEND = "compiled"
    window_counts = _impl.window_counts
    js_pairs_chunk = _impl.js_pairs_chunk
    js_sparse_pairs_chunk = _impl.js_sparse_pairs_chunk
    jaccard_pairs_chunk = _impl.jaccard_pairs_chunk
    Scanner = _impl.FastScanner
else:
    from . import _fallback as _impl  # type: ignore[no-redef]

    BACKEND = "fallback"
    window_counts = _impl.window_counts
    js_pairs_chunk = _impl.js_pairs_chunk
    js_sparse_pairs_chunk = _impl.js_sparse_pairs_chunk
    jaccard_pairs_chunk = _impl.jaccard_pairs_chunk
    Scanner = _impl.PyScanner


def backend_name() -> str:
    """Which kernel implementation is active: 'compiled' or 'fallback'."""
    return BACKEND


def condensed_size(n: int) -> int:
    """Number of unordered pairs over n items."""
    return n * (n - 1) // 2


def condensed_index(i: int, j: int, n: int) -> int:
    """Position of pair (i, j), i < j, in condensed pair order."""
    if not 0 <= i < j < n:
        raise IndexError(f"bad pair ({i}, {j}) for n={n}")
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


__all__ = [
    "BACKEND",
    "backend_name",
    "window_counts",
    "js_pairs_chunk",
    "js_sparse_pairs_chunk",
    "jaccard_pairs_chunk",
    "Scanner",
    "condensed_size",
    "condensed_index",
]
