import json

import pytest
from hypothesis import given, strategies as st

from distcoref.corpus import (
    Clustering, CorpusStats, DataError, Document, Mention, SubMention, build_bags, last_name,
    load_documents, read_clustering, read_mentions, tokenize, write_clustering, write_documents,
    write_mentions,
)


def test_tokenize_examples():
    assert tokenize("Barack Obama's 2nd term") == ["barack", "obama", "s", "2nd", "term"]
    assert tokenize("") == []
    assert tokenize("---") == []
    assert tokenize("Émile_Zola") == ["émile", "zola"]


@given(st.text())
def test_tokenize_idempotent(text):
    toks = tokenize(text)
    assert tokenize(" ".join(toks)) == toks


def _subs(doc, *pieces):
    out = []
    for p in pieces:
        start = doc.text.index(p)
        out.append(SubMention(doc.doc_id, (start, start + len(p)), p))
    return out


def test_name_bag_counts_all_surfaces():
    doc = Document("d", "John Smith met Smith", ((0, 10), (15, 20)))
    name, _ = build_bags(doc.sub_mentions(), doc, 5)
    assert name == {"john": 1, "smith": 2}


def test_context_window():
    doc = Document("d", "alpha John Smith beta", ((6, 16),))
    assert build_bags(doc.sub_mentions(), doc, 1)[1] == {"alpha": 1, "beta": 1}
    assert build_bags(doc.sub_mentions(), doc, 0)[1] == {}


def test_context_excludes_own_tokens_and_accumulates():
    doc = Document("d", "x Smith y Smith z", ((2, 7), (10, 15)))
    _, ctx = build_bags(doc.sub_mentions(), doc, 1)
    # y is next to both sub-mentions, so its windows overlap
    assert ctx == {"x": 1, "y": 2, "z": 1}


def test_build_bags_out_of_bounds_names_mention():
    doc = Document("d", "short", ())
    with pytest.raises(DataError, match="m7"):
        build_bags([SubMention("d", (0, 99), "x")], doc, 1, mention_id="m7")


@given(st.lists(st.text(alphabet="ab .'", min_size=1, max_size=8), min_size=1, max_size=5), st.integers(0, 4))
def test_name_bag_total(surfaces, window):
    text, spans = "", []
    for s in surfaces:
        text += "q "
        spans.append((len(text), len(text) + len(s)))
        text += s + " "
    doc = Document("d", text, tuple(spans))
    name, _ = build_bags(doc.sub_mentions(), doc, window)
    assert sum(name.values()) == sum(len(tokenize(s)) for s in surfaces)


def test_canonical_longest_then_lexicographic():
    subs = [SubMention("d", (0, 1), s) for s in ("Smith", "Jon Smith", "Ann Smith")]
    assert Mention.canonical_of(subs) == "Ann Smith"


def test_last_name_rule():
    assert last_name("John F. Smith") == "smith"
    assert last_name("Mr. Smith") == "smith"
    assert last_name("Smith,") == "smith"


def test_document_invariants():
    with pytest.raises(ValueError):
        Document("d", "abc", ((0, 5),))
    with pytest.raises(ValueError):
        Document("d", "abcdef", ((2, 4), (3, 5)))
    with pytest.raises(ValueError):
        Document("d", "abc", ((1, 1),))


def test_documents_round_trip_and_errors(tmp_path):
    docs = [Document("a", "Hi Bob", ((3, 6),)), Document("b", "Zoë Ng", ((0, 6),))]
    p = tmp_path / "docs.jsonl"
    write_documents(p, docs)
    assert load_documents(p) == docs

    p.write_text(p.read_text() + json.dumps({"doc_id": "a", "text": "", "person_spans": []}) + "\n")
    with pytest.raises(DataError, match="duplicate") as err:
        load_documents(p)
    assert err.value.line == 3
    p.write_text('{"doc_id": "a", "text": "x"}\nnot json\n')
    with pytest.raises(DataError) as err:
        load_documents(p)
    assert err.value.line == 2 and str(err.value).startswith(f"{p}:2:")


groups = st.lists(st.lists(st.text(alphabet="abcxyz", min_size=1, max_size=4), min_size=1, max_size=4),
                  max_size=6)


@given(groups)
def test_clustering_round_trip(tmp_path_factory, gs):
    seen, clean = set(), []
    for g in gs:
        g = [m for m in dict.fromkeys(g) if m not in seen]
        seen.update(g)
        if g:
            clean.append(g)
    c = Clustering.from_groups(clean)
    c.check()
    p = tmp_path_factory.mktemp("c") / "c.tsv"
    write_clustering(p, c)
    assert read_clustering(p) == c
    lines = p.read_text().splitlines()
    assert lines == sorted(lines)


def test_clustering_parse_errors(tmp_path):
    p = tmp_path / "c.tsv"
    p.write_text("m1\tE1\nm2\n")
    with pytest.raises(DataError) as err:
        read_clustering(p)
    assert err.value.line == 2
    p.write_text("m1\tE1\nm1\tE2\n")
    with pytest.raises(DataError, match="duplicate"):
        read_clustering(p)


@given(st.lists(st.tuples(st.integers(0, 9), st.one_of(st.none(), st.integers(0, 4))), max_size=30))
def test_clustering_consistent_after_moves(moves):
    c = Clustering.singletons([f"m{k}" for k in range(10)])
    for m, e in moves:
        eids = sorted(c.entities)
        dst = None if e is None else eids[e % len(eids)]
        c.move(f"m{m}", dst)
        c.check()
        assert len(c) == 10


def test_mentions_round_trip(tmp_path):
    doc = Document("d1", "Then John Smith and Smith left", ((5, 15), (20, 25)))
    m = Mention.from_document("d1#0", doc, doc.person_spans, window=2)
    p = tmp_path / "m.jsonl"
    write_mentions(p, [m])
    assert read_mentions(p) == [m]
    p.write_text(p.read_text() + p.read_text())
    with pytest.raises(DataError, match="duplicate"):
        read_mentions(p)


def test_corpus_stats():
    stats = CorpusStats.from_token_lists([["a", "b", "a"], ["a"]])
    assert stats.doc_count == 2
    assert stats.doc_freq == {"a": 2, "b": 1}
