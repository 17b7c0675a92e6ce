"""Documents, mentions, clusterings and their on-disk formats.

Offsets are code points into ``Document.text``. Every reader raises
:class:`DataError` carrying the file name and 1-based line number of the
offending record.
"""

from __future__ import annotations

import bisect
import itertools
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "DataError",
    "Document",
    "SubMention",
    "Mention",
    "Clustering",
    "CorpusStats",
    "HONORIFICS",
    "tokenize",
    "name_tokens",
    "last_name",
    "build_bags",
    "load_documents",
    "write_documents",
    "read_clustering",
    "write_clustering",
    "read_mentions",
    "write_mentions",
]

DEFAULT_WINDOW = 50

HONORIFICS = frozenset({"mr", "mrs", "ms", "miss"})

# \w minus underscore == alphanumeric code points
_RUN = re.compile(r"[^\W_]+")


class DataError(ValueError):
    """Malformed or inconsistent input data."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = str(path) if path is not None else None
        self.line = line
        where = ""
        if self.path is not None:
            where = self.path if line is None else f"{self.path}:{line}"
            where += ": "
        super().__init__(where + message)


def tokenize(text: str) -> list[str]:
    """Lowercased maximal alphanumeric runs of ``text``, in order."""
    # lowercase first: it can turn one letter into letter + combining mark (U+0130),
    # which must split the run, and it never makes a non-alphanumeric character alphanumeric
    return _RUN.findall(text.lower())


def _token_spans(text: str) -> list[tuple[int, int, str]]:
    spans = []
    for m in _RUN.finditer(text):
        for tok in tokenize(m.group()):
            spans.append((m.start(), m.end(), tok))
    return spans


def name_tokens(surface: str) -> list[str]:
    """Tokens of a person name with leading honorifics removed."""
    toks = tokenize(surface)
    i = 0
    while i < len(toks) - 1 and toks[i] in HONORIFICS:
        i += 1
    return toks[i:]


def last_name(name: str) -> str:
    """Final whitespace-separated token of ``name``, honorifics stripped.

    Surrounding punctuation is trimmed and the result lowercased; a name
    consisting only of an honorific keeps it.
    """
    words = [w.strip(".,;:'\"()[]").lower() for w in name.split()]
    words = [w for w in words if w]
    rest = [w for w in words if w.rstrip(".") not in HONORIFICS]
    if rest:
        return rest[-1]
    return words[-1] if words else ""


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str
    person_spans: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        spans = tuple((int(s), int(e)) for s, e in self.person_spans)
        object.__setattr__(self, "person_spans", spans)
        prev_end = 0
        for start, end in spans:
            if not 0 <= start < end <= len(self.text):
                raise ValueError(f"span ({start}, {end}) out of bounds in {self.doc_id!r}")
            if start < prev_end:
                raise ValueError(f"span ({start}, {end}) overlaps or is unsorted in {self.doc_id!r}")
            prev_end = end

    def sub_mentions(self) -> list[SubMention]:
        return [SubMention(self.doc_id, sp, self.text[sp[0]:sp[1]]) for sp in self.person_spans]


@dataclass(frozen=True)
class SubMention:
    doc_id: str
    span: tuple[int, int]
    surface: str


@dataclass(frozen=True)
class Mention:
    """A within-document cluster of name occurrences.

    ``canonical`` is the longest sub-mention surface (lexicographically
    smallest among equals).
    """

    mention_id: str
    doc_id: str
    sub_mentions: tuple[SubMention, ...]
    canonical: str
    name_bag: Mapping[str, int] = field(default_factory=dict)
    context_bag: Mapping[str, int] = field(default_factory=dict)

    @staticmethod
    def canonical_of(sub_mentions: Iterable[SubMention]) -> str:
        surfaces = [s.surface for s in sub_mentions]
        if not surfaces:
            raise ValueError("a mention needs at least one sub-mention")
        return min(surfaces, key=lambda s: (-len(s), s))

    @classmethod
    def from_document(cls, mention_id: str, doc: Document, spans: Sequence[tuple[int, int]],
                      window: int = DEFAULT_WINDOW) -> Mention:
        subs = tuple(SubMention(doc.doc_id, tuple(sp), doc.text[sp[0]:sp[1]]) for sp in sorted(spans))
        name_bag, context_bag = build_bags(subs, doc, window, mention_id=mention_id)
        return cls(mention_id, doc.doc_id, subs, cls.canonical_of(subs), name_bag, context_bag)


def build_bags(sub_mentions: Sequence[SubMention], doc: Document, window: int = DEFAULT_WINDOW,
               mention_id: str | None = None) -> tuple[Counter, Counter]:
    """Name bag and context bag for a group of sub-mentions of ``doc``.

    The context bag counts up to ``window`` tokens on each side of every
    sub-mention; tokens overlapping any of the group's spans are skipped and
    overlapping windows accumulate.
    """
    if window < 0:
        raise ValueError("window must be >= 0")
    label = mention_id or doc.doc_id
    spans = []
    for sm in sub_mentions:
        start, end = sm.span
        if sm.doc_id != doc.doc_id or not 0 <= start < end <= len(doc.text):
            raise DataError(f"mention {label!r}: span {sm.span} out of bounds for document {doc.doc_id!r}")
        spans.append((start, end))

    name_bag = Counter()
    for sm in sub_mentions:
        name_bag.update(tokenize(doc.text[sm.span[0]:sm.span[1]]))

    context_bag = Counter()
    if window == 0:
        return name_bag, context_bag
    outside = [(s, e, t) for s, e, t in _token_spans(doc.text)
               if not any(s < pe and ps < e for ps, pe in spans)]
    starts = [s for s, _, _ in outside]
    ends = [e for _, e, _ in outside]
    for start, end in spans:
        left = bisect.bisect_right(ends, start)
        right = bisect.bisect_left(starts, end)
        for _, _, tok in outside[max(0, left - window):left]:
            context_bag[tok] += 1
        for _, _, tok in outside[right:right + window]:
            context_bag[tok] += 1
    return name_bag, context_bag


class Clustering:
    """A partition of mention ids into entities.

    ``assignment`` and ``entities`` are kept mutually consistent; emptied
    entities are removed immediately.
    """

    def __init__(self, assignment: Mapping[str, str] | None = None):
        self.assignment: dict[str, str] = {}
        self.entities: dict[str, set[str]] = {}
        self._fresh = itertools.count()
        for mid, eid in (assignment or {}).items():
            self.assignment[mid] = eid
            self.entities.setdefault(eid, set()).add(mid)

    @classmethod
    def from_groups(cls, groups: Iterable[Iterable[str]], prefix: str = "e") -> Clustering:
        assignment = {}
        for k, group in enumerate(groups):
            for mid in group:
                if mid in assignment:
                    raise ValueError(f"mention {mid!r} appears in two groups")
                assignment[mid] = f"{prefix}{k}"
        return cls(assignment)

    @classmethod
    def singletons(cls, mention_ids: Iterable[str]) -> Clustering:
        return cls.from_groups([m] for m in mention_ids)

    def __len__(self):
        return len(self.assignment)

    def __contains__(self, mid):
        return mid in self.assignment

    def __eq__(self, other):
        if not isinstance(other, Clustering):
            return NotImplemented
        return self.assignment == other.assignment

    def __repr__(self):
        return f"Clustering({len(self.assignment)} mentions, {len(self.entities)} entities)"

    @property
    def mention_ids(self) -> set[str]:
        return set(self.assignment)

    def entity_of(self, mid: str) -> str:
        return self.assignment[mid]

    def members(self, eid: str) -> set[str]:
        return self.entities.get(eid, set())

    def new_entity_id(self) -> str:
        while True:
            eid = f"_new{next(self._fresh)}"
            if eid not in self.entities:
                return eid

    def move(self, mid: str, eid: str | None) -> str:
        """Reassign ``mid`` to ``eid`` (``None`` = a fresh entity); returns the destination id."""
        if mid not in self.assignment:
            raise KeyError(f"unknown mention {mid!r}")
        if eid is None:
            eid = self.new_entity_id()
        src = self.assignment[mid]
        if src == eid:
            return eid
        members = self.entities[src]
        members.discard(mid)
        if not members:
            del self.entities[src]
        self.entities.setdefault(eid, set()).add(mid)
        self.assignment[mid] = eid
        return eid

    def copy(self) -> Clustering:
        return Clustering(self.assignment)

    def restrict(self, mention_ids: Iterable[str]) -> Clustering:
        keep = set(mention_ids)
        return Clustering({m: e for m, e in self.assignment.items() if m in keep})

    def partition(self) -> frozenset[frozenset[str]]:
        return frozenset(frozenset(v) for v in self.entities.values())

    def relabeled(self, prefix: str = "E") -> Clustering:
        """Same partition with entity ids renumbered by smallest member."""
        groups = sorted(sorted(v) for v in self.entities.values())
        width = max(1, len(str(len(groups))))
        assignment = {}
        for k, group in enumerate(groups):
            for mid in group:
                assignment[mid] = f"{prefix}{k:0{width}d}"
        return Clustering(assignment)

    def check(self) -> None:
        seen = set()
        for eid, members in self.entities.items():
            if not members:
                raise AssertionError(f"empty entity {eid!r}")
            for mid in members:
                if self.assignment.get(mid) != eid:
                    raise AssertionError(f"mention {mid!r} inconsistent with entity {eid!r}")
                seen.add(mid)
        if seen != set(self.assignment):
            raise AssertionError("assignment and entities cover different mentions")


@dataclass(frozen=True)
class CorpusStats:
    doc_count: int
    doc_freq: Mapping[str, int]

    @classmethod
    def from_token_lists(cls, token_lists: Iterable[Iterable[str]]) -> CorpusStats:
        df = Counter()
        n = 0
        for tokens in token_lists:
            n += 1
            df.update(set(tokens))
        return cls(n, dict(df))


# --------------------------------------------------------------------------
# file formats


def _iter_lines(path) -> Iterator[tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if line.strip():
                yield lineno, line


def _json_records(path) -> Iterator[tuple[int, dict]]:
    for lineno, line in _iter_lines(path):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON ({exc.msg})", path, lineno) from None
        if not isinstance(rec, dict):
            raise DataError("expected a JSON object", path, lineno)
        yield lineno, rec


def load_documents(path) -> list[Document]:
    docs = []
    seen = set()
    for lineno, rec in _json_records(path):
        try:
            doc = Document(str(rec["doc_id"]), rec["text"], tuple(tuple(sp) for sp in rec.get("person_spans", [])))
        except KeyError as exc:
            raise DataError(f"missing field {exc.args[0]!r}", path, lineno) from None
        except (TypeError, ValueError) as exc:
            raise DataError(str(exc), path, lineno) from None
        if doc.doc_id in seen:
            raise DataError(f"duplicate doc_id {doc.doc_id!r}", path, lineno)
        seen.add(doc.doc_id)
        docs.append(doc)
    return docs


def write_documents(path, docs: Iterable[Document]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            rec = {"doc_id": doc.doc_id, "text": doc.text, "person_spans": [list(sp) for sp in doc.person_spans]}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_clustering(path) -> Clustering:
    assignment = {}
    for lineno, line in _iter_lines(path):
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0] or not fields[1]:
            raise DataError(f"expected 'mention_id<TAB>entity_id', got {len(fields)} field(s)", path, lineno)
        mid, eid = fields
        if mid in assignment:
            raise DataError(f"duplicate mention_id {mid!r}", path, lineno)
        assignment[mid] = eid
    return Clustering(assignment)


def write_clustering(path, clustering: Clustering) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for mid in sorted(clustering.assignment):
            fh.write(f"{mid}\t{clustering.assignment[mid]}\n")


def _mention_record(m: Mention) -> dict:
    return {
        "mention_id": m.mention_id,
        "doc_id": m.doc_id,
        "spans": [list(s.span) for s in m.sub_mentions],
        "surfaces": [s.surface for s in m.sub_mentions],
        "canonical": m.canonical,
        "name_bag": dict(sorted(m.name_bag.items())),
        "context_bag": dict(sorted(m.context_bag.items())),
    }


def write_mentions(path, mentions: Iterable[Mention]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for m in mentions:
            fh.write(json.dumps(_mention_record(m), ensure_ascii=False) + "\n")


def read_mentions(path) -> list[Mention]:
    out = []
    seen = set()
    for lineno, rec in _json_records(path):
        try:
            doc_id = str(rec["doc_id"])
            spans, surfaces = rec["spans"], rec["surfaces"]
            if len(spans) != len(surfaces) or not spans:
                raise ValueError("spans and surfaces must be non-empty and of equal length")
            subs = tuple(SubMention(doc_id, (int(s), int(e)), surf) for (s, e), surf in zip(spans, surfaces))
            m = Mention(str(rec["mention_id"]), doc_id, subs, rec["canonical"],
                        Counter(rec.get("name_bag", {})), Counter(rec.get("context_bag", {})))
        except KeyError as exc:
            raise DataError(f"missing field {exc.args[0]!r}", path, lineno) from None
        except (TypeError, ValueError) as exc:
            raise DataError(str(exc), path, lineno) from None
        if m.mention_id in seen:
            raise DataError(f"duplicate mention_id {m.mention_id!r}", path, lineno)
        seen.add(m.mention_id)
        out.append(m)
    return out
