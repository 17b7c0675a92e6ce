"""High-precision within-document coreference over proper-name spans.

Greedy agglomerative clustering with a hand-set, complete-linkage distance:
two clusters are as far apart as their least compatible pair of
sub-mentions, so a single honorific clash keeps them separate forever.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .corpus import DEFAULT_WINDOW, DataError, Document, Mention, last_name, name_tokens, tokenize

MALE_HONORIFICS = frozenset({"mr"})
FEMALE_HONORIFICS = frozenset({"mrs", "ms", "miss"})


@dataclass(frozen=True)
class WdFeatureWeights:
    """Weights of the distance features; distance = max(0, base + sum of fired weights)."""

    exact_match: float = 0.0
    last_name_match: float = -1.0
    first_name_match: float = -1.0
    token_subset: float = -1.0
    gender_conflict: float = 100.0
    base: float = 2.0
    merge_threshold: float = 1.0

    def __post_init__(self):
        # the most any other features can pull a conflicting pair down
        pull = sum(min(0.0, w) for w in (self.exact_match, self.last_name_match,
                                          self.first_name_match, self.token_subset))
        if self.base + self.gender_conflict + pull < self.merge_threshold:
            raise ValueError("gender_conflict weight too small: conflicting pairs could merge")

    @classmethod
    def from_file(cls, path) -> WdFeatureWeights:
        known = {f.name for f in fields(cls)}
        values = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, value = line.partition("=")
                key = key.strip().replace("-", "_")
                if not sep or key not in known:
                    raise DataError(f"expected one of {sorted(known)} as key=value", path, lineno)
                try:
                    values[key] = float(value)
                except ValueError:
                    raise DataError(f"not a number: {value.strip()!r}", path, lineno) from None
        return cls(**values)


DEFAULT_WEIGHTS = WdFeatureWeights()


def _gender(tokens: list[str]) -> str | None:
    if tokens and tokens[0] in MALE_HONORIFICS:
        return "m"
    if tokens and tokens[0] in FEMALE_HONORIFICS:
        return "f"
    return None


class _Name:
    __slots__ = ("tokens", "core", "first", "last", "gender")

    def __init__(self, surface: str):
        self.tokens = tokenize(surface)
        self.core = name_tokens(surface)
        self.first = self.core[0] if len(self.core) >= 2 else None
        self.last = last_name(surface)
        self.gender = _gender(self.tokens)


def _name_distance(a: _Name, b: _Name, w: WdFeatureWeights) -> float:
    score = w.base
    if a.tokens == b.tokens:
        score += w.exact_match
    if a.last and a.last == b.last:
        score += w.last_name_match
    if a.first is not None and a.first == b.first:
        score += w.first_name_match
    sa, sb = set(a.core), set(b.core)
    if sa and sb and (sa <= sb or sb <= sa):
        score += w.token_subset
    if a.gender and b.gender and a.gender != b.gender:
        score += w.gender_conflict
    return max(0.0, score)


def pair_distance(cluster_a, cluster_b, w: WdFeatureWeights = DEFAULT_WEIGHTS) -> float:
    """Complete-linkage distance between two non-empty sets of sub-mentions."""
    cluster_a, cluster_b = list(cluster_a), list(cluster_b)
    if not cluster_a or not cluster_b:
        raise ValueError("clusters must be non-empty")
    docs = {s.doc_id for s in cluster_a} | {s.doc_id for s in cluster_b}
    if len(docs) != 1:
        raise ValueError("clusters must come from the same document")
    names_a = [_Name(s.surface) for s in cluster_a]
    names_b = [_Name(s.surface) for s in cluster_b]
    return max(_name_distance(x, y, w) for x in names_a for y in names_b)


def cluster_spans(surfaces: list[str], w: WdFeatureWeights = DEFAULT_WEIGHTS) -> list[list[int]]:
    """Greedy agglomeration of name strings; returns groups of input indices."""
    names = [_Name(s) for s in surfaces]
    n = len(names)
    dist = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            dist[i][j] = dist[j][i] = _name_distance(names[i], names[j], w)
    groups = {i: [i] for i in range(n)}
    while len(groups) > 1:
        live = sorted(groups)
        best = None
        for x, i in enumerate(live):
            row = dist[i]
            for j in live[x + 1:]:
                if best is None or row[j] < best[0]:
                    best = (row[j], i, j)
        d, i, j = best
        if d >= w.merge_threshold:
            break
        groups[i].extend(groups.pop(j))
        for k in groups:
            if k != i:
                dist[i][k] = dist[k][i] = max(dist[i][k], dist[j][k])
    return [sorted(g) for _, g in sorted(groups.items())]


def within_doc_coref(doc: Document, w: WdFeatureWeights = DEFAULT_WEIGHTS,
                     window: int = DEFAULT_WINDOW) -> list[Mention]:
    subs = doc.sub_mentions()
    groups = cluster_spans([s.surface for s in subs], w)
    mentions = []
    for k, group in enumerate(sorted(groups, key=lambda g: g[0])):
        spans = [subs[i].span for i in group]
        mentions.append(Mention.from_document(f"{doc.doc_id}#{k}", doc, spans, window))
    return mentions


def mentions_for_corpus(docs, w: WdFeatureWeights = DEFAULT_WEIGHTS, window: int = DEFAULT_WINDOW) -> list[Mention]:
    out = []
    for doc in docs:
        out.extend(within_doc_coref(doc, w, window))
    return out


__all__ = ["WdFeatureWeights", "DEFAULT_WEIGHTS", "pair_distance", "cluster_spans",
           "within_doc_coref", "mentions_for_corpus"]
