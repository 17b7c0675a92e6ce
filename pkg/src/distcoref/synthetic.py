"""Synthetic news corpus with a matching toy knowledge base.

People carry a private vocabulary (signature words) and belong to a field
whose vocabulary they share with others. Ambiguity is injected on purpose:

* same names: distinct people with identical full names, in the same field;
* shared last names: different first names over a small surname pool;
* alternate names: nickname first names ("Dick" for "Richard"), reached in
  the KB through redirects or disambiguation pages;
* renames: a stage alias under a different surname, reached by a redirect.

Every document mentions one or two people; ground truth is recorded per span.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field

from .corpus import Clustering, Document, Mention, write_documents

FIRST_NAMES = [
    ("Richard", "Dick", "m"), ("Robert", "Bob", "m"), ("William", "Bill", "m"), ("Charles", "Chuck", "m"),
    ("Daniel", "Dan", "m"), ("Edward", "Ted", "m"), ("James", "Jim", "m"), ("Thomas", "Tom", "m"),
    ("Michael", "Mike", "m"), ("Joseph", "Joe", "m"), ("Anthony", "Tony", "m"), ("Steven", "Steve", "m"),
    ("Elizabeth", "Liz", "f"), ("Katherine", "Kate", "f"), ("Margaret", "Peggy", "f"), ("Patricia", "Pat", "f"),
    ("Jennifer", "Jen", "f"), ("Susan", "Sue", "f"), ("Deborah", "Debbie", "f"), ("Rebecca", "Becky", "f"),
    ("George", None, "m"), ("Kevin", None, "m"), ("Brian", None, "m"), ("Paul", None, "m"), ("Mark", None, "m"),
    ("Sean", None, "m"), ("Hillary", None, "f"), ("Laura", None, "f"), ("Nancy", None, "f"), ("Maria", None, "f"),
]

COMMON = (
    "the of and to in a for on that with was said is by at from as his her it be has have an they "
    "were this which who had been their after also about more than year new two first would last one "
    "week told over city state when into people officials time could some other most on percent"
).split()

_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "gr", "st", "tr", "kl", "sh"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ou", "ea"]
_CODAS = ["", "n", "r", "l", "s", "m", "x", "th", "nd", "rk"]


def _word(rng: random.Random, syllables: int) -> str:
    return "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) + rng.choice(_CODAS) for _ in range(syllables))


class _Words:
    """Draws pseudo-words that never repeat."""

    def __init__(self, rng: random.Random, taken=()):
        self.rng = rng
        self.taken = set(taken) | set(COMMON)

    def draw(self, syllables: int = 2) -> str:
        while True:
            w = _word(self.rng, syllables)
            if w not in self.taken:
                self.taken.add(w)
                return w


@dataclass
class Person:
    title: str
    first: str
    last: str
    gender: str
    nickname: str | None
    field: int
    signature: list[str]
    alias: str | None = None
    middle: str | None = None

    @property
    def full(self) -> str:
        return f"{self.first} {self.last}"


@dataclass
class SyntheticCorpus:
    people: list[Person]
    documents: list[Document]
    truth: dict[tuple[str, tuple[int, int]], str]
    redirects: list[tuple[str, str]]
    disambiguations: list[tuple[str, list[str]]]
    pages: list[tuple[str, str]]
    split: dict[str, str] = field(default_factory=dict)  # doc_id -> "train" / "test"

    def kb(self):
        from .kb import KBSnapshot
        return KBSnapshot.build(self.redirects, self.disambiguations, self.pages)

    def docs_for(self, split: str) -> list[Document]:
        return [d for d in self.documents if self.split.get(d.doc_id) == split]

    def gold_for(self, mentions: list[Mention]) -> Clustering:
        """True entity of each mention, taken from its first sub-mention."""
        return Clustering({m.mention_id: self.truth[(m.doc_id, m.sub_mentions[0].span)] for m in mentions})

    def write(self, out_dir, split: str | None = None) -> None:
        os.makedirs(out_dir, exist_ok=True)
        docs = self.documents if split is None else self.docs_for(split)
        write_documents(os.path.join(out_dir, "documents.jsonl"), docs)
        with open(os.path.join(out_dir, "kb_redirects.tsv"), "w", encoding="utf-8") as fh:
            for s, t in self.redirects:
                fh.write(f"{s}\t{t}\n")
        with open(os.path.join(out_dir, "kb_disambig.tsv"), "w", encoding="utf-8") as fh:
            for t, members in self.disambiguations:
                fh.write(f"{t}\t{'|'.join(members)}\n")
        with open(os.path.join(out_dir, "kb_pages.jsonl"), "w", encoding="utf-8") as fh:
            for t, text in self.pages:
                fh.write(json.dumps({"title": t, "text": text}, ensure_ascii=False) + "\n")
        with open(os.path.join(out_dir, "truth.tsv"), "w", encoding="utf-8") as fh:
            keep = {d.doc_id for d in docs}
            for (doc_id, (s, e)), title in sorted(self.truth.items()):
                if doc_id in keep:
                    fh.write(f"{doc_id}\t{s}\t{e}\t{title}\n")


def _sizes(rng: random.Random, n_entities: int, n_mentions: int) -> list[int]:
    if n_mentions < n_entities:
        raise ValueError("need at least one mention per entity")
    weights = [1.0 / (k + 1) ** 0.9 for k in range(n_entities)]
    rng.shuffle(weights)
    z = sum(weights)
    sizes = [1 + int((n_mentions - n_entities) * w / z) for w in weights]
    for k in rng.sample(range(n_entities), n_mentions - sum(sizes)):
        sizes[k] += 1
    return sizes


def _make_people(rng, words, n, n_fields, surnames, same_name_rate, alias_rate, middle_rate) -> list[Person]:
    people: list[Person] = []
    while len(people) < n:
        first, nick, gender = rng.choice(FIRST_NAMES)
        last = rng.choice(surnames)
        fld = rng.randrange(n_fields)
        sig = [words.draw(rng.choice((2, 3))) for _ in range(14)]
        p = Person("", first, last, gender, nick, fld, sig)
        if rng.random() < alias_rate:
            p.alias = f"{words.draw(2).capitalize()} {words.draw(2).capitalize()}"
        if rng.random() < middle_rate:
            p.middle = rng.choice("ABCDEFGHJKLMNPRSTW")
        people.append(p)
        if len(people) < n and rng.random() < same_name_rate:
            twin = Person("", first, last, gender, nick, fld, [words.draw(rng.choice((2, 3))) for _ in range(14)])
            people.append(twin)
    return people


def _assign_titles(people: list[Person], field_names: list[str]) -> None:
    by_full: dict[str, list[Person]] = {}
    for p in people:
        by_full.setdefault(p.full.lower(), []).append(p)
    for group in by_full.values():
        for k, p in enumerate(group):
            base = f"{p.first} {p.middle}. {p.last}" if p.middle else p.full
            if len(group) > 1:
                base = f"{p.full} ({field_names[p.field]}{'' if k == 0 else f' {k + 1}'})"
            p.title = base


def _build_kb(rng, people, field_words, field_names, n_distractors, words, kb_coverage):
    pages, redirects, disambig = [], [], {}
    covered = [p for p in people if rng.random() < kb_coverage]
    for p in covered:
        toks = [p.first, p.last] + rng.sample(p.signature, 10) * 2
        toks += rng.choices(field_words[p.field], k=10) + rng.choices(COMMON, k=15)
        rng.shuffle(toks)
        pages.append((p.title, " ".join(toks)))
    for k in range(n_distractors):
        toks = [words.draw(2) for _ in range(20)] + rng.choices(COMMON, k=20)
        pages.append((f"{words.draw(2).capitalize()} {field_names[k % len(field_names)]}", " ".join(toks)))

    by_full: dict[str, list[Person]] = {}
    for p in covered:
        by_full.setdefault(p.full, []).append(p)
    for full, group in by_full.items():
        if len(group) > 1:
            disambig.setdefault(full, []).extend(p.title for p in group)
        elif group[0].title != full:
            redirects.append((full, group[0].title))
        for p in group:
            if p.nickname:
                nick = f"{p.nickname} {p.last}"
                if len(group) > 1:
                    disambig.setdefault(nick, []).extend([p.title])
                else:
                    # chain through the full-name title when it is itself a redirect
                    redirects.append((nick, full if p.title != full else p.title))
            if p.alias:
                redirects.append((p.alias, p.title))
    pages.sort()
    return pages, sorted(set(redirects)), sorted((t, sorted(set(m))) for t, m in disambig.items())


def _document(rng, doc_id, cast: list[tuple[Person, str]], field_words):
    """Lay out one article; ``cast`` pairs each person with the name form used first."""
    items: list = []  # plain words, or (surface, person)
    length = rng.randint(45, 70)
    for p, form in cast:
        items.extend(rng.choice(COMMON) for _ in range(rng.randint(0, 6)))
        items.append((form, p))
        body: list = []
        for _ in range(length // len(cast)):
            r = rng.random()
            if r < 0.40:
                body.append(rng.choice(COMMON))
            elif r < 0.62:
                body.append(rng.choice(field_words[p.field]))
            else:
                body.append(rng.choice(p.signature))
        for _ in range(rng.randint(0, 2)):
            if form == p.alias:
                short = p.alias
            elif rng.random() < 0.6:
                short = p.last
            else:
                short = ("Mr. " if p.gender == "m" else "Mrs. ") + p.last
            body.insert(rng.randint(3, len(body)), (short, p))
        items.extend(body)
    parts, spans, pos = [], [], 0
    for item in items:
        if parts:
            parts.append(" ")
            pos += 1
        if isinstance(item, tuple):
            surface, p = item
            spans.append((pos, pos + len(surface), p))
        else:
            surface = item
        parts.append(surface)
        pos += len(surface)
    doc = Document(doc_id, "".join(parts) + ".", tuple((s, e) for s, e, _ in spans))
    return doc, {(doc_id, (s, e)): p.title for s, e, p in spans}


def generate(n_entities: int = 50, n_mentions: int = 500, seed: int = 0, *, n_fields: int = 6,
             surname_pool: int | None = None, same_name_rate: float = 0.25, nickname_rate: float = 0.4,
             alias_rate: float = 0.06, middle_rate: float = 0.15, pair_doc_rate: float = 0.1,
             kb_coverage: float = 1.0, n_distractors: int = 10, test_entities: int = 0,
             test_mentions: int = 0) -> SyntheticCorpus:
    """Build a corpus; with ``test_entities`` a disjoint held-out split is added.

    Each person mention becomes exactly one within-document mention, so
    ``n_mentions`` is also the number of cross-document mentions per split.
    """
    rng = random.Random(seed)
    words = _Words(rng)
    field_names = [words.draw(2).capitalize() for _ in range(n_fields)]
    field_words = [[words.draw(2) for _ in range(15)] for _ in range(n_fields)]
    total_entities = n_entities + test_entities
    pool = surname_pool or max(4, (total_entities * 2) // 5)
    surnames = [words.draw(2).capitalize() for _ in range(pool)]

    people = _make_people(rng, words, total_entities, n_fields, surnames, same_name_rate, alias_rate, middle_rate)
    train_people, test_people = people[:n_entities], people[n_entities:total_entities]
    _assign_titles(people, field_names)
    pages, redirects, disambig = _build_kb(rng, people, field_words, field_names, n_distractors, words, kb_coverage)

    documents, truth, split = [], {}, {}
    for name, group, count in (("train", train_people, n_mentions), ("test", test_people, test_mentions)):
        if not group:
            continue
        sizes = _sizes(rng, len(group), count)
        slots = [p for p, s in zip(group, sizes) for _ in range(s)]
        rng.shuffle(slots)
        d = 0
        while slots:
            cast = [slots.pop()]
            if slots and rng.random() < pair_doc_rate:
                other = next((q for q in reversed(slots) if q.last != cast[0].last), None)
                if other is not None:
                    slots.remove(other)
                    cast.append(other)
            forms = []
            for p in cast:
                if p.alias and rng.random() < 0.3:
                    forms.append((p, p.alias))
                elif p.nickname and rng.random() < nickname_rate:
                    forms.append((p, f"{p.nickname} {p.last}"))
                else:
                    forms.append((p, p.full))
            doc_id = f"{name}{d:06d}"
            doc, t = _document(rng, doc_id, forms, field_words)
            documents.append(doc)
            truth.update(t)
            split[doc_id] = name
            d += 1
    return SyntheticCorpus(people, documents, truth, redirects, disambig, pages, split)
