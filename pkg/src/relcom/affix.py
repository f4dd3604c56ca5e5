"""Affix-pair detection over community names.

A pair (base, modified) is affix-related when one name is a proper prefix
or suffix of the other, case-insensitively: modified = affix + base (the
affix sits at the front, position "prefix") or modified = base + affix
(position "suffix"). Detection is O(n log n + matches) via two sorted
scans: names sorted directly give shared-prefix blocks, names reversed
give shared-suffix blocks.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, replace
from importlib import resources
from typing import Iterable, Iterator

from .corpus import normalize_community
from .errors import ConfigurationError

PREFIX = "prefix"
SUFFIX = "suffix"

UNCATEGORIZED = "uncategorized"


@dataclass(frozen=True, slots=True)
class AffixPair:
    """base plus affix gives modified; position says where the affix sits
    inside the modified name."""
    base: str
    modified: str
    affix: str
    position: str
    category: str | None = None


def _extension_blocks(sorted_names: list[str]) -> Iterator[tuple[str, str]]:
    """Yield (short, long) where long starts with short, names pre-sorted."""
    n = len(sorted_names)
    for i, stem in enumerate(sorted_names):
        j = i + 1
        while j < n and sorted_names[j].startswith(stem):
            yield stem, sorted_names[j]
            j += 1


def detect_pairs(names: Iterable[str]) -> list[AffixPair]:
    """All affix-related pairs among `names`, sorted by (base, modified).

    When both a prefix and a suffix reading exist for the same
    (base, modified) — e.g. 'aa' from 'a' — the suffix reading is kept,
    so each (base, modified) appears exactly once.
    """
    norm = sorted({normalize_community(n) for n in names})
    found: dict[tuple[str, str], AffixPair] = {}

    # modified = affix + base: base is a suffix of modified, so scan the
    # reversed spellings first; the direct scan below overwrites with the
    # suffix reading when both hold.
    reversed_sorted = sorted(n[::-1] for n in norm)
    for rstem, rlong in _extension_blocks(reversed_sorted):
        base, modified = rstem[::-1], rlong[::-1]
        affix = modified[: len(modified) - len(base)]
        found[(base, modified)] = AffixPair(base, modified, affix, PREFIX)

    for stem, longer in _extension_blocks(norm):
        affix = longer[len(stem):]
        found[(stem, longer)] = AffixPair(stem, longer, affix, SUFFIX)

    return [found[k] for k in sorted(found)]


def affix_counts(pairs: Iterable[AffixPair]) -> Counter:
    """Occurrences of each (affix, position) across detected pairs."""
    return Counter((p.affix, p.position) for p in pairs)


def filter_affix_frequency(pairs: list[AffixPair],
                           min_count: int = 3) -> list[AffixPair]:
    """Keep pairs whose (affix, position) occurs at least `min_count` times."""
    if min_count < 1:
        raise ConfigurationError(f"min_count must be >= 1, got {min_count}")
    counts = affix_counts(pairs)
    return [p for p in pairs if counts[(p.affix, p.position)] >= min_count]


def top_affixes(pairs: Iterable[AffixPair], limit: int = 10) -> list[tuple]:
    """(affix, position, count) rows, most frequent first; ties by name."""
    counts = affix_counts(pairs)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(a, pos, c) for (a, pos), c in ranked[:limit]]


def categorize(pairs: Iterable[AffixPair],
               taxonomy: "Taxonomy") -> list[AffixPair]:
    """Copies of the pairs with their taxonomy category filled in."""
    return [replace(p, category=taxonomy.categorize(p.affix)) for p in pairs]


def affix_stats(pairs: Iterable[AffixPair],
                taxonomy: "Taxonomy | None" = None) -> dict:
    """Summary counts: per affix, per category, and the suffix share."""
    pairs = list(pairs)
    counts = affix_counts(pairs)
    n = len(pairs)
    suffixes = sum(1 for p in pairs if p.position == SUFFIX)
    by_category: dict[str, int] = {}
    if taxonomy is not None:
        for p in pairs:
            cat = taxonomy.categorize(p.affix)
            by_category[cat] = by_category.get(cat, 0) + 1
    return {
        "n_pairs": n,
        "n_affixes": len(counts),
        "suffix_fraction": suffixes / n if n else 0.0,
        "by_affix": [(a, pos, c) for (a, pos), c in
                     sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))],
        "by_category": dict(sorted(by_category.items(),
                                   key=lambda kv: (-kv[1], kv[0]))),
    }


class Taxonomy:
    """Affix-string -> category lookup loaded from a JSON mapping of
    category name to affix list."""

    def __init__(self, mapping: dict[str, list[str]]):
        self.categories = dict(mapping)
        self._by_affix: dict[str, str] = {}
        for cat, affixes in mapping.items():
            for a in affixes:
                prior = self._by_affix.get(a)
                if prior is not None and prior != cat:
                    raise ConfigurationError(
                        f"affix {a!r} appears in both {prior!r} and {cat!r}")
                self._by_affix[a] = cat

    @classmethod
    def load(cls, path=None) -> "Taxonomy":
        """Read a taxonomy file; defaults to the bundled one."""
        if path is None:
            raw = resources.files("relcom").joinpath("taxonomy.json").read_text()
        else:
            with open(path, "r", encoding="utf-8") as fh:
                raw = fh.read()
        mapping = json.loads(raw)
        if not isinstance(mapping, dict) or not all(
                isinstance(v, list) for v in mapping.values()):
            raise ConfigurationError("taxonomy must map category -> [affixes]")
        return cls(mapping)

    def categorize(self, affix: str) -> str:
        """Category of an affix, or 'uncategorized' when unknown."""
        return self._by_affix.get(affix, UNCATEGORIZED)

    def __contains__(self, affix: str) -> bool:
        return affix in self._by_affix
