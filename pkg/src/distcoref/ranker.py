"""Distant labeling: pick at most one knowledge-base page per mention.

Candidate pages are ranked by how likely the mention's article is to have
generated them under an idf-weighted unigram model, interpolated with a
uniform background distribution. Everything is computed in log space.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Iterable, Mapping, Optional

from .corpus import Clustering, CorpusStats, Document, tokenize
from .kb import KBSnapshot, TokenCounts, candidate_set, idf

IdfFn = Callable[[str], float]

SIZE_BUCKETS = ((1, 1), (2, 9), (10, 99), (100, 999), (1000, 9999))


@dataclass(frozen=True)
class RankerParams:
    alpha: float = 1e-4
    lam: float = 1 - 1e-4
    log_beta: float = -18.0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0 < self.lam < 1:
            raise ValueError("lambda must lie in (0, 1)")

    @property
    def floor(self) -> float:
        """Lowest attainable log score, reached with zero token overlap."""
        return math.log((1 - self.lam) * self.alpha)


@dataclass(frozen=True)
class WeightedDoc:
    weights: Mapping[str, float]
    source: str = "article"


def _counts(counts) -> Mapping[str, int]:
    return counts.counts if isinstance(counts, TokenCounts) else counts


def token_weights(counts, idf_fn: IdfFn | CorpusStats, source: str = "article") -> WeightedDoc:
    """Per-token weight n_t * idf(t), normalized to sum to one.

    Falls back to count proportions when every token has zero idf.
    """
    counts = _counts(counts)
    if not counts:
        raise ValueError("cannot weight an empty token bag")
    if isinstance(idf_fn, CorpusStats):
        idf_fn = partial(idf, stats=idf_fn)
    raw = {t: n * idf_fn(t) for t, n in counts.items()}
    z = math.fsum(raw.values())
    if z <= 0:
        raw = {t: float(n) for t, n in counts.items()}
        z = math.fsum(raw.values())
    return WeightedDoc({t: v / z for t, v in raw.items()}, source)


def log_score(candidate: WeightedDoc, article: WeightedDoc, p: RankerParams = RankerParams()) -> float:
    """log P(candidate | article), up to the normalizing constant."""
    if not candidate.weights:
        raise ValueError("candidate has no tokens")
    aw = article.weights
    lam = p.lam
    back = (1 - p.lam) * p.alpha
    total = 0.0
    for t, w in candidate.weights.items():
        if w:
            total += w * math.log(lam * aw.get(t, 0.0) + back)
    return total


class EntitySelector:
    """Scores candidate pages against articles, caching page weights.

    ``article_idf`` and ``page_idf`` default to the article corpus stats and
    the KB's own page stats respectively.
    """

    def __init__(self, kb: KBSnapshot, article_stats: CorpusStats | None = None,
                 params: RankerParams = RankerParams(),
                 article_idf: IdfFn | None = None, page_idf: IdfFn | None = None):
        self.kb = kb
        self.params = params
        if article_idf is None:
            if article_stats is None:
                raise ValueError("need article_stats or article_idf")
            article_idf = partial(idf, stats=article_stats)
        if page_idf is None:
            page_idf = partial(idf, stats=kb.kb_stats)
        self.article_idf = article_idf
        self.page_idf = page_idf
        self._pages: dict[str, Optional[WeightedDoc]] = {}

    def page_weights(self, title: str) -> Optional[WeightedDoc]:
        if title not in self._pages:
            counts = self.kb.page(title)
            self._pages[title] = token_weights(counts, self.page_idf, "page") if counts else None
        return self._pages[title]

    def article_weights(self, article) -> WeightedDoc:
        if isinstance(article, Document):
            article = Counter(tokenize(article.text))
        if not _counts(article):
            return WeightedDoc({}, "article")
        return token_weights(article, self.article_idf, "article")

    def scores(self, candidates: Iterable[str], article_w: WeightedDoc) -> dict[str, float]:
        out = {}
        for title in candidates:
            pw = self.page_weights(title)
            out[title] = log_score(pw, article_w, self.params) if pw is not None else -math.inf
        return out

    def select(self, candidates: Iterable[str], article_w: WeightedDoc) -> tuple[Optional[str], float]:
        """Best candidate and its score; the title is None when below threshold."""
        scored = self.scores(candidates, article_w)
        if not scored:
            return None, -math.inf
        title, score = min(scored.items(), key=lambda kv: (-kv[1], kv[0]))
        if score >= self.params.log_beta:
            return title, score
        return None, score


def select_entity(candidates, article: Document, kb: KBSnapshot, article_stats: CorpusStats,
                  p: RankerParams = RankerParams()) -> Optional[str]:
    sel = EntitySelector(kb, article_stats, p)
    return sel.select(candidates, sel.article_weights(article))[0]


@dataclass
class LabelStats:
    mentions: int = 0
    zero_candidates: int = 0
    one_candidate: int = 0
    multiple_candidates: int = 0
    accepted: int = 0
    rejected: int = 0
    entity_sizes: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mentions": self.mentions,
            "candidates": {"zero": self.zero_candidates, "one": self.one_candidate,
                           "multiple": self.multiple_candidates},
            "decisions": {"accepted": self.accepted, "rejected": self.rejected,
                          "unresolvable": self.zero_candidates},
            "entity_size_histogram": self.entity_sizes,
        }


def size_histogram(clustering: Clustering) -> dict[str, int]:
    hist = {f"{lo}" if lo == hi else f"{lo}-{hi}": 0 for lo, hi in SIZE_BUCKETS}
    top = SIZE_BUCKETS[-1][1]
    for members in clustering.entities.values():
        size = len(members)
        if size > top:
            hist[f">{top}"] = hist.get(f">{top}", 0) + 1
            continue
        for lo, hi in SIZE_BUCKETS:
            if lo <= size <= hi:
                hist[f"{lo}" if lo == hi else f"{lo}-{hi}"] += 1
                break
    return hist


def article_stats_for(docs: Iterable[Document]) -> CorpusStats:
    return CorpusStats.from_token_lists(tokenize(d.text) for d in docs)


def distant_label_corpus(docs, mentions, kb: KBSnapshot, p: RankerParams = RankerParams(),
                         article_stats: CorpusStats | None = None,
                         selector: EntitySelector | None = None) -> tuple[Clustering, LabelStats]:
    """Label every mention with a KB page (or drop it).

    Candidate sets are memoized per canonical string and article weights per
    document, so work stays linear in the number of mentions.
    """
    docs = {d.doc_id: d for d in docs}
    if selector is None:
        if article_stats is None:
            article_stats = article_stats_for(docs.values())
        selector = EntitySelector(kb, article_stats, p)
    cand_cache: dict[str, list[str]] = {}
    article_cache: dict[str, WeightedDoc] = {}
    stats = LabelStats()
    labels = {}
    for m in mentions:
        stats.mentions += 1
        cands = cand_cache.get(m.canonical)
        if cands is None:
            cands = cand_cache[m.canonical] = sorted(candidate_set(m.canonical, kb))
        if not cands:
            stats.zero_candidates += 1
            continue
        if len(cands) == 1:
            stats.one_candidate += 1
        else:
            stats.multiple_candidates += 1
        aw = article_cache.get(m.doc_id)
        if aw is None:
            if m.doc_id not in docs:
                raise KeyError(f"mention {m.mention_id!r} refers to unknown document {m.doc_id!r}")
            aw = article_cache[m.doc_id] = selector.article_weights(docs[m.doc_id])
        title, _ = selector.select(cands, aw)
        if title is None:
            stats.rejected += 1
        else:
            stats.accepted += 1
            labels[m.mention_id] = title
    clustering = Clustering(labels)
    stats.entity_sizes = size_histogram(clustering)
    return clustering, stats

