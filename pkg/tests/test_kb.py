import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from distcoref.corpus import CorpusStats, DataError
from distcoref.kb import KBSnapshot, candidate_set, idf, load_kb
from helpers import page_oracle, random_kb


def write_kb(tmp_path, redirects="", disambig="", pages=""):
    paths = [tmp_path / n for n in ("r.tsv", "d.tsv", "p.jsonl")]
    for p, body in zip(paths, (redirects, disambig, pages)):
        p.write_text(body)
    return paths


def test_load_nixon(tmp_path):
    kb = load_kb(*write_kb(tmp_path, "Dick Nixon\tRichard Nixon\n", "",
                           '{"title": "Richard Nixon", "text": "Nixon watergate"}\n'))
    assert len(kb.redirects) == 1 and len(kb.pages) == 1
    assert kb.page("richard  nixon").counts == {"nixon": 1, "watergate": 1}
    assert kb.kb_stats.doc_count == 1


def test_page_beats_redirect_beats_disambig(tmp_path, caplog):
    kb = load_kb(*write_kb(tmp_path, "A\tB\nC\tB\n", "C\tA|B\n",
                           '{"title": "A", "text": "x"}\n{"title": "B", "text": "y"}\n'))
    assert kb.is_page("A") and "a" not in kb.redirects
    assert kb.redirects == {"c": "b"} and not kb.disambiguations
    assert len(kb.conflicts) == 2
    assert "warning" in caplog.text.lower() or caplog.records


def test_self_redirect_dropped(tmp_path):
    kb = load_kb(*write_kb(tmp_path, "A\tA\n"))
    assert not kb.redirects and kb.conflicts


def test_title_normalization():
    kb = KBSnapshot.build(redirects=[("  vangogh ", "Vincent  van Gogh")], pages=[("Vincent van Gogh", "art")])
    assert candidate_set("VanGogh", kb) == {"Vincent van Gogh"}


def test_malformed_lines(tmp_path):
    with pytest.raises(DataError) as err:
        load_kb(*write_kb(tmp_path, "A\tB\njustone\n"))
    assert err.value.line == 2
    with pytest.raises(DataError) as err:
        load_kb(*write_kb(tmp_path, "", "", '{"title": "A", "text": "x"}\n{"title": 3}\n'))
    assert err.value.line == 2


def test_candidate_examples():
    kb = KBSnapshot.build(redirects=[("dick nixon", "Richard Nixon")], pages=[("Richard Nixon", "n")])
    assert candidate_set("Dick Nixon", kb) == {"Richard Nixon"}
    kb = KBSnapshot.build(disambiguations=[("hillary", ["Hillary Clinton", "Edmund Hillary"])],
                          pages=[("Hillary Clinton", "x"), ("Edmund Hillary", "y")])
    assert candidate_set("Hillary", kb) == {"Hillary Clinton", "Edmund Hillary"}
    kb = KBSnapshot.build(redirects=[("a", "b"), ("b", "a")])
    assert candidate_set("a", kb) == set()
    assert candidate_set("nobody", kb) == set()


def test_chained_redirect_into_disambiguation():
    kb = KBSnapshot.build(redirects=[("x", "y")], disambiguations=[("y", ["P", "x", "Q"])], pages=[("P", "p")])
    assert candidate_set("x", kb) == {"P"}


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 50))
def test_candidate_set_matches_bfs_oracle(seed, n):
    rng = random.Random(seed)
    titles, kb = random_kb(rng, n)
    oracle = page_oracle(kb)
    for t in titles + ["absent"]:
        got = candidate_set(t, kb)
        assert got == oracle(t)
        assert all(kb.is_page(x) for x in got)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_adding_disambiguation_member_never_shrinks(seed):
    rng = random.Random(seed)
    titles, kb = random_kb(rng, 30)
    if not kb.disambiguations:
        return
    key = rng.choice(sorted(kb.disambiguations))
    extra = rng.choice(titles).lower()
    bigger = KBSnapshot(kb.redirects, {**kb.disambiguations, key: kb.disambiguations[key] | {extra}},
                        kb.pages, kb.titles, kb.kb_stats)
    for t in titles:
        assert candidate_set(t, kb) <= candidate_set(t, bigger)


def test_idf_examples():
    stats = CorpusStats(100, {"the": 100, "rare": 1})
    assert idf("the", stats) == 0.0
    assert idf("rare", stats) == pytest.approx(4.6052, abs=1e-4)
    assert idf("rare", stats) == math.log(100)
    assert idf("unseen", stats) == math.log(100)
    with pytest.raises(ValueError):
        idf("x", CorpusStats(0, {}))
