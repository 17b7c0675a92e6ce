"""Shared builders for tests (importable because pytest puts tests/ on sys.path)."""

import random
from collections import Counter

import networkx as nx

from distcoref.corpus import Mention, SubMention, tokenize
from distcoref.kb import KBSnapshot


def make_mention(mid, canonical, name_bag=None, context_bag=None, doc_id=None):
    doc_id = doc_id or f"d-{mid}"
    sub = SubMention(doc_id, (0, len(canonical)), canonical)
    bag = Counter(tokenize(canonical)) if name_bag is None else Counter(name_bag)
    return Mention(mid, doc_id, (sub,), canonical, bag, Counter(context_bag or {}))


def random_mentions(rng: random.Random, n: int, names=("john smith", "jon smith", "jane doe", "j doe", "mary ann"),
                    vocab="abcdefgh"):
    out = []
    for k in range(n):
        canon = rng.choice(names)
        ctx = Counter(rng.choice(vocab) for _ in range(rng.randint(0, 6)))
        out.append(make_mention(f"m{k:03d}", canon, context_bag=ctx))
    return out


def random_kb(rng: random.Random, n_titles: int = 50, page_rate: float = 0.3):
    """A random KB whose titles are each a page, a redirect, a disambiguation, or absent."""
    titles = [f"T{k}" for k in range(n_titles)]
    redirects, disambigs, pages = [], [], []
    for t in titles:
        r = rng.random()
        if r < page_rate:
            pages.append((t, f"body of {t}"))
        elif r < page_rate + 0.3:
            target = rng.choice(titles)
            if target != t:
                redirects.append((t, target))
        elif r < page_rate + 0.55:
            disambigs.append((t, rng.sample(titles, rng.randint(1, min(4, n_titles)))))
    return titles, KBSnapshot.build(redirects, disambigs, pages)


def page_oracle(kb: KBSnapshot):
    """Oracle: content pages reachable in the redirect/disambiguation graph, via networkx."""
    g = nx.DiGraph()
    g.add_edges_from(kb.redirects.items())
    g.add_edges_from((t, m) for t, ms in kb.disambiguations.items() for m in ms)
    g.remove_edges_from([e for e in list(g.edges) if e[0] in kb.pages])

    def reachable(start: str) -> set[str]:
        start = start.lower()
        reach = (nx.descendants(g, start) if start in g else set()) | {start}
        return {kb.titles[k] for k in reach if k in kb.pages}

    return reachable


def bell_fixture():
    """Eight mentions and a merge-rewarding theta whose optimum is not the unique-name clustering."""
    from distcoref.model import WeightVector

    names = ["John Smith", "John Smith", "John Smith", "Jon Smith", "Jon Smith", "Jane Doe", "Jane Doe", "J. Doe"]
    ctx = ["law court", "law court", "golf", "law", "golf", "film star", "film", "star film"]
    mentions = [make_mention(f"m{k}", n, context_bag=Counter(c.split())) for k, (n, c) in enumerate(zip(names, ctx))]
    theta = WeightVector.from_dicts(
        plus={"canonical_match": 2.0, "last_name_match": 0.5, "canonical_mismatch": -0.4,
              "context_cos_0": -1.5, "context_cos_7": 0.6, "context_cos_9": 1.0},
        minus={"canonical_match": -0.5, "last_name_mismatch": 0.2},
        entity={"size_gt_2": -0.3, "size_gt_4": -2.0},
    )
    return mentions, theta


def exhaustive_best(mentions, theta):
    """Max over all set partitions of the score relative to all singletons."""
    from sympy.utilities.iterables import multiset_partitions

    from distcoref.corpus import Clustering
    from distcoref.model import MentionTable, model_log_score

    table = MentionTable(mentions)
    ids = [m.mention_id for m in mentions]
    base = model_log_score(Clustering.singletons(ids), table, theta)
    best, count = -float("inf"), 0
    for parts in multiset_partitions(ids):
        count += 1
        best = max(best, model_log_score(Clustering.from_groups(parts), table, theta) - base)
    return best, count


def oracle_prf(pred, gold):
    """Explicit enumeration of all unordered mention pairs, in exact rationals."""
    import itertools
    from fractions import Fraction

    ids = sorted(pred.assignment)
    tp = pp = gp = 0
    for a, b in itertools.combinations(ids, 2):
        p = pred.assignment[a] == pred.assignment[b]
        g = gold.assignment[a] == gold.assignment[b]
        tp += p and g
        pp += p
        gp += g
    prec = Fraction(tp, pp) if pp else Fraction(1)
    rec = Fraction(tp, gp) if gp else Fraction(1)
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else Fraction(0)
    return prec, rec, f1


def random_partition(rng, ids, k):
    from distcoref.corpus import Clustering

    return Clustering({m: f"e{rng.randrange(k)}" for m in ids})
