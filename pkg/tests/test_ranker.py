import math
import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

import distcoref.ranker as ranker
from distcoref.corpus import Clustering, CorpusStats, Document
from distcoref.kb import KBSnapshot
from distcoref.ranker import (
    EntitySelector, RankerParams, WeightedDoc, article_stats_for, distant_label_corpus, log_score,
    select_entity, size_histogram, token_weights,
)
from distcoref.synthetic import generate
from distcoref.withindoc import mentions_for_corpus

P = RankerParams()


def test_defaults():
    assert (P.alpha, P.lam, P.log_beta) == (1e-4, 1 - 1e-4, -18.0)
    assert P.floor == pytest.approx(math.log(1e-8), abs=1e-9)
    assert P.floor < P.log_beta
    for bad in ({"alpha": 0}, {"alpha": 1}, {"lam": 0}, {"lam": 1.5}):
        with pytest.raises(ValueError):
            RankerParams(**bad)


def test_token_weights_examples():
    w = token_weights({"obama": 2, "the": 2}, {"obama": 4.0, "the": 0.5}.get).weights
    assert w["obama"] == pytest.approx(8 / 9) and w["the"] == pytest.approx(1 / 9)
    assert token_weights({"t": 3}, lambda t: 2.0).weights == {"t": 1.0}
    assert token_weights({"a": 1, "b": 3}, lambda t: 0.0).weights == {"a": 0.25, "b": 0.75}
    with pytest.raises(ValueError):
        token_weights({}, lambda t: 1.0)


def test_log_score_examples():
    # lambda = 1 - alpha = 0.9999, so the interpolated probability is 0.9999 * w + 1e-8
    art = WeightedDoc({"football": 0.5, "coach": 0.5})
    assert log_score(WeightedDoc({"football": 1.0}), art) == pytest.approx(math.log(0.9999 * 0.5 + 1e-8), abs=1e-12)
    assert log_score(WeightedDoc({"football": 1.0}), art) == pytest.approx(-0.693247, abs=1e-6)
    assert log_score(WeightedDoc({"cricket": 1.0}), art) == pytest.approx(-18.4207, abs=1e-4)
    same = WeightedDoc({"t": 1.0})
    assert log_score(same, same) == pytest.approx(-1.0e-4, rel=1e-3)
    assert log_score(same, same) < 0


weights = st.dictionaries(st.sampled_from("abcdefghij"), st.integers(1, 5), min_size=1)


@given(weights, weights, st.floats(1e-6, 0.5), st.floats(0.01, 0.999999))
def test_score_bounds(cand, art, alpha, lam):
    p = RankerParams(alpha, lam)
    s = log_score(token_weights(cand, lambda t: 1.0), token_weights(art, lambda t: 1.0), p)
    assert p.floor - 1e-9 <= s < 0


@given(weights, st.floats(0.01, 1000))
def test_idf_scaling_leaves_weights(counts, k):
    base = lambda t: 1.0 + ord(t) % 3
    a = token_weights(counts, base).weights
    b = token_weights(counts, lambda t: k * base(t)).weights
    assert a.keys() == b.keys()
    assert all(a[t] == pytest.approx(b[t], rel=1e-12, abs=1e-15) for t in a)


def test_select_entity_is_argmax(nixon_kb, nixon_docs):
    stats = article_stats_for(nixon_docs)
    sel = EntitySelector(nixon_kb, stats)
    aw = sel.article_weights(nixon_docs[0])
    scores = sel.scores(["Richard Nixon", "Football Coach"], aw)
    assert max(scores, key=scores.get) == "Richard Nixon"
    assert select_entity(["Richard Nixon", "Football Coach"], nixon_docs[0], nixon_kb, stats) == "Richard Nixon"
    assert select_entity(["Football Coach"], nixon_docs[0], nixon_kb, stats) is None
    assert select_entity([], nixon_docs[0], nixon_kb, stats) is None


def test_ties_break_lexicographically():
    kb = KBSnapshot.build(pages=[("Beta", "same words"), ("Alpha", "same words"), ("Other", "junk")])
    sel = EntitySelector(kb, CorpusStats(2, {"same": 1, "words": 1}))
    assert sel.select(["Beta", "Alpha"], sel.article_weights(Counter(same=1, words=1)))[0] == "Alpha"


def test_threshold_is_inclusive(nixon_kb, nixon_docs):
    stats = article_stats_for(nixon_docs)
    sel = EntitySelector(nixon_kb, stats)
    aw = sel.article_weights(nixon_docs[0])
    s = sel.scores(["Richard Nixon"], aw)["Richard Nixon"]
    at = EntitySelector(nixon_kb, stats, RankerParams(log_beta=s))
    above = EntitySelector(nixon_kb, stats, RankerParams(log_beta=math.nextafter(s, 0)))
    assert at.select(["Richard Nixon"], aw)[0] == "Richard Nixon"
    assert above.select(["Richard Nixon"], aw)[0] is None


def test_nixon_fixture(nixon_kb, nixon_docs):
    mentions = mentions_for_corpus(nixon_docs)
    labels, stats = distant_label_corpus(nixon_docs, mentions, nixon_kb)
    assert labels.assignment == {"n1#0": "Richard Nixon", "n2#0": "Richard Nixon"}
    assert stats.entity_sizes["2-9"] == 1 and stats.entity_sizes["1"] == 0
    assert stats.to_dict()["decisions"] == {"accepted": 2, "rejected": 0, "unresolvable": 1}


def test_rejected_mentions_absent(nixon_kb, nixon_docs):
    mentions = mentions_for_corpus(nixon_docs)
    labels, stats = distant_label_corpus(nixon_docs, mentions, nixon_kb, RankerParams(log_beta=-0.01))
    assert len(labels) == 0 and stats.rejected == 2


def test_distinct_pages_fill_bucket_one():
    names = [f"Person{k} Q" for k in range(5)]
    docs = [Document(f"d{k}", f"{n} likes topic{k}", ((0, len(n)),)) for k, n in enumerate(names)]
    kb = KBSnapshot.build(pages=[(n, f"{n} topic{k}") for k, n in enumerate(names)])
    mentions = mentions_for_corpus(docs)
    labels, stats = distant_label_corpus(docs, mentions, kb)
    assert stats.entity_sizes["1"] == len(mentions) == 5


def test_size_histogram_buckets():
    groups = [[f"a{k}" for k in range(s)] for s in (1, 2, 9, 10, 99, 100, 1000)]
    groups = [[f"{s}-{m}" for m in g] for s, g in enumerate(groups)]
    hist = size_histogram(Clustering.from_groups(groups))
    assert hist == {"1": 1, "2-9": 2, "10-99": 2, "100-999": 1, "1000-9999": 1}


def test_labels_independent_of_mention_order():
    corpus = generate(20, 120, seed=3, kb_coverage=0.8)
    docs = corpus.documents
    mentions = mentions_for_corpus(docs)
    kb = corpus.kb()
    first, _ = distant_label_corpus(docs, mentions, kb)
    shuffled = list(mentions)
    random.Random(1).shuffle(shuffled)
    second, _ = distant_label_corpus(docs, shuffled, kb)
    assert first.assignment == second.assignment


def test_work_linear_in_candidates(monkeypatch):
    corpus = generate(30, 300, seed=5)
    docs, kb = corpus.documents, corpus.kb()
    mentions = mentions_for_corpus(docs)
    calls = Counter()
    real_score, real_cands = ranker.log_score, ranker.candidate_set

    def counted_score(*a, **k):
        calls["score"] += 1
        return real_score(*a, **k)

    def counted_cands(*a, **k):
        calls["cands"] += 1
        return real_cands(*a, **k)

    monkeypatch.setattr(ranker, "log_score", counted_score)
    monkeypatch.setattr(ranker, "candidate_set", counted_cands)
    distant_label_corpus(docs, mentions, kb)
    bound = sum(len(real_cands(m.canonical, kb)) for m in mentions)
    assert calls["cands"] <= len(mentions)
    assert calls["score"] <= bound
