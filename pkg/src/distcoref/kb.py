"""Knowledge-base snapshot and candidate-entity lookup.

A title is exactly one of: content page, redirect, disambiguation page, or
absent. Lookups are case-insensitive after whitespace normalization.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Mapping

from .corpus import CorpusStats, DataError, tokenize

logger = logging.getLogger(__name__)


def normalize_title(title: str) -> str:
    return " ".join(title.split())


def title_key(title: str) -> str:
    return normalize_title(title).lower()


@dataclass(frozen=True)
class TokenCounts:
    counts: Mapping[str, int]
    total: int

    @classmethod
    def from_tokens(cls, tokens) -> TokenCounts:
        c = Counter(tokens)
        return cls(dict(c), sum(c.values()))

    def __bool__(self):
        return self.total > 0


@dataclass
class KBSnapshot:
    """Redirect, disambiguation and page tables keyed by lowercased title.

    ``titles`` maps keys back to display titles; ``conflicts`` records every
    precedence or self-loop decision taken while loading.
    """

    redirects: dict[str, str] = field(default_factory=dict)
    disambiguations: dict[str, frozenset[str]] = field(default_factory=dict)
    pages: dict[str, TokenCounts] = field(default_factory=dict)
    titles: dict[str, str] = field(default_factory=dict)
    kb_stats: CorpusStats = field(default_factory=lambda: CorpusStats(0, {}))
    conflicts: list[str] = field(default_factory=list)

    @classmethod
    def build(cls, redirects=(), disambiguations=(), pages=()) -> KBSnapshot:
        """Assemble a snapshot from (source, target), (title, members) and (title, text) items."""
        kb = cls()
        for title, text in pages:
            key = title_key(title)
            if key in kb.pages:
                kb._conflict(f"duplicate page {title!r}: keeping first")
                continue
            kb.pages[key] = TokenCounts.from_tokens(tokenize(text))
            kb.titles[key] = normalize_title(title)
        for source, target in redirects:
            key, tkey = title_key(source), title_key(target)
            if key == tkey:
                kb._conflict(f"self-redirect {source!r} dropped")
            elif key in kb.pages:
                kb._conflict(f"{source!r} is both a page and a redirect: kept as page")
            elif key in kb.redirects:
                if kb.redirects[key] != tkey:
                    kb._conflict(f"redirect {source!r} has several targets: keeping first")
            else:
                kb.redirects[key] = tkey
                kb.titles.setdefault(key, normalize_title(source))
        for title, members in disambiguations:
            key = title_key(title)
            if key in kb.pages:
                kb._conflict(f"{title!r} is both a page and a disambiguation: kept as page")
                continue
            if key in kb.redirects:
                kb._conflict(f"{title!r} is both a redirect and a disambiguation: kept as redirect")
                continue
            keys = frozenset(title_key(m) for m in members if normalize_title(m))
            kb.disambiguations[key] = kb.disambiguations.get(key, frozenset()) | keys
            kb.titles.setdefault(key, normalize_title(title))
        kb.kb_stats = CorpusStats(len(kb.pages), dict(Counter(t for tc in kb.pages.values() for t in tc.counts)))
        return kb

    def _conflict(self, message: str) -> None:
        self.conflicts.append(message)
        logger.warning(message)

    def is_page(self, title: str) -> bool:
        return title_key(title) in self.pages

    def page(self, title: str) -> TokenCounts:
        return self.pages[title_key(title)]


def _read_tsv(path, widths=2):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != widths or not all(p.strip() for p in parts):
                raise DataError(f"expected {widths} non-empty tab-separated fields", path, lineno)
            yield lineno, parts


def load_kb(redirects_path, disambig_path, pages_path) -> KBSnapshot:
    redirects = [tuple(p) for _, p in _read_tsv(redirects_path)]
    disambigs = [(title, [m for m in members.split("|") if m.strip()])
                 for _, (title, members) in _read_tsv(disambig_path)]
    pages = []
    with open(pages_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                title, text = rec["title"], rec["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"bad page record ({exc})", pages_path, lineno) from None
            if not isinstance(title, str) or not isinstance(text, str) or not normalize_title(title):
                raise DataError("title and text must be strings, title non-empty", pages_path, lineno)
            pages.append((title, text))
    return KBSnapshot.build(redirects, disambigs, pages)


def candidate_set(mention_string: str, kb: KBSnapshot) -> set[str]:
    """Content pages reachable from ``mention_string`` through redirects and disambiguations.

    Each title is expanded at most once, so redirect cycles terminate.
    """
    start = title_key(mention_string)
    found = set()
    seen = {start}
    queue = deque([start])
    while queue:
        key = queue.popleft()
        if key in kb.pages:
            found.add(kb.titles[key])
            continue
        if key in kb.redirects:
            nxt = (kb.redirects[key],)
        else:
            nxt = kb.disambiguations.get(key, ())
        for k in nxt:
            if k not in seen:
                seen.add(k)
                queue.append(k)
    return found


def idf(token: str, stats: CorpusStats) -> float:
    """ln(N / df); unseen tokens get ln(N)."""
    if stats.doc_count < 1:
        raise ValueError("idf needs a corpus with at least one document")
    df = stats.doc_freq.get(token, 0)
    if df <= 0:
        return math.log(stats.doc_count)
    return math.log(stats.doc_count / df)
