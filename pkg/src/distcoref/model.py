"""Log-linear factor-graph coreference model.

The unnormalized log density of a clustering is

    sum over entities e          theta_entity . f(e)
  + sum over same-entity pairs   theta_plus   . phi(i, j)
  + sum over cross-entity pairs  theta_minus  . phi(i, j)

Pair features are binary and shared between attraction and repulsion
factors; their weights are not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Clustering, DataError, Mention, last_name

N_BINS = 10

PAIR_FEATURES = (
    "canonical_match",
    "canonical_mismatch",
    "last_name_match",
    "last_name_mismatch",
    *(f"name_cos_{b}" for b in range(N_BINS)),
    *(f"context_cos_{b}" for b in range(N_BINS)),
)
ENTITY_FEATURES = ("size_eq_1", "size_gt_1", "size_gt_2", "size_gt_4")
PAIR_INDEX = {name: k for k, name in enumerate(PAIR_FEATURES)}
ENTITY_INDEX = {name: k for k, name in enumerate(ENTITY_FEATURES)}
_NAME_BIN0 = PAIR_INDEX["name_cos_0"]
_CONTEXT_BIN0 = PAIR_INDEX["context_cos_0"]

FACTOR_CLASSES = ("plus", "minus", "entity")


def cosine_bin(a: Mapping[str, int], b: Mapping[str, int]) -> int:
    """min(9, floor(10 * cos(a, b))), exact for integer bags; 0 if either is empty."""
    na = sum(v * v for v in a.values())
    nb = sum(v * v for v in b.values())
    if not na or not nb:
        return 0
    if len(a) > len(b):
        a, b = b, a
    dot = sum(v * b.get(t, 0) for t, v in a.items())
    # floor(sqrt(x)) == isqrt(floor(x)) for x >= 0
    return min(N_BINS - 1, math.isqrt((100 * dot * dot) // (na * nb)))


def cosine(a: Mapping[str, int], b: Mapping[str, int]) -> float:
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    if not na or not nb:
        return 0.0
    return sum(v * b.get(t, 0) for t, v in a.items()) / (na * nb)


@dataclass(frozen=True)
class PairFeatures:
    canonical_match: bool
    last_name_match: bool
    name_bin: int
    context_bin: int

    @property
    def canonical_mismatch(self) -> bool:
        return not self.canonical_match

    @property
    def last_name_mismatch(self) -> bool:
        return not self.last_name_match

    def active(self) -> tuple[int, int, int, int]:
        return (0 if self.canonical_match else 1,
                2 if self.last_name_match else 3,
                _NAME_BIN0 + self.name_bin,
                _CONTEXT_BIN0 + self.context_bin)

    def names(self) -> list[str]:
        return [PAIR_FEATURES[k] for k in self.active()]


@dataclass(frozen=True)
class EntityFeatures:
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("entities have at least one member")

    def active(self) -> tuple[int, ...]:
        s = self.size
        if s == 1:
            return (0,)
        if s > 4:
            return (1, 2, 3)
        if s > 2:
            return (1, 2)
        return (1,)

    def names(self) -> list[str]:
        return [ENTITY_FEATURES[k] for k in self.active()]


def pair_features(m_i: Mention, m_j: Mention) -> PairFeatures:
    if m_i.mention_id == m_j.mention_id:
        raise ValueError("pair features need two distinct mentions")
    return PairFeatures(
        m_i.canonical.lower() == m_j.canonical.lower(),
        last_name(m_i.canonical) == last_name(m_j.canonical),
        cosine_bin(m_i.name_bag, m_j.name_bag),
        cosine_bin(m_i.context_bag, m_j.context_bag),
    )


def entity_features(members: Iterable) -> EntityFeatures:
    return EntityFeatures(len(list(members)))


class WeightVector:
    """Untied weights for attraction (plus), repulsion (minus) and entity factors."""

    def __init__(self, plus=None, minus=None, entity=None):
        self.plus = [float(x) for x in plus] if plus is not None else [0.0] * len(PAIR_FEATURES)
        self.minus = [float(x) for x in minus] if minus is not None else [0.0] * len(PAIR_FEATURES)
        self.entity = [float(x) for x in entity] if entity is not None else [0.0] * len(ENTITY_FEATURES)
        if len(self.plus) != len(PAIR_FEATURES) or len(self.minus) != len(PAIR_FEATURES) \
                or len(self.entity) != len(ENTITY_FEATURES):
            raise ValueError("weight vector has the wrong shape")

    @classmethod
    def zeros(cls) -> WeightVector:
        return cls()

    @classmethod
    def from_dicts(cls, plus=None, minus=None, entity=None) -> WeightVector:
        w = cls()
        for cls_name, values in (("plus", plus), ("minus", minus), ("entity", entity)):
            for name, value in (values or {}).items():
                w.set(cls_name, name, value)
        return w

    def _table(self, factor_class: str) -> tuple[list[float], dict[str, int]]:
        if factor_class == "plus":
            return self.plus, PAIR_INDEX
        if factor_class == "minus":
            return self.minus, PAIR_INDEX
        if factor_class == "entity":
            return self.entity, ENTITY_INDEX
        raise KeyError(f"unknown factor class {factor_class!r}")

    def get(self, factor_class: str, feature: str) -> float:
        values, index = self._table(factor_class)
        return values[index[feature]]

    def set(self, factor_class: str, feature: str, value: float) -> None:
        values, index = self._table(factor_class)
        values[index[feature]] = float(value)

    def copy(self) -> WeightVector:
        return WeightVector(self.plus, self.minus, self.entity)

    def as_array(self) -> np.ndarray:
        return np.array(self.plus + self.minus + self.entity)

    def __eq__(self, other):
        if not isinstance(other, WeightVector):
            return NotImplemented
        return (self.plus, self.minus, self.entity) == (other.plus, other.minus, other.entity)

    def __repr__(self):
        nz = sum(1 for v in self.plus + self.minus + self.entity if v)
        return f"WeightVector({nz} non-zero)"

    def rows(self):
        for cls_name in FACTOR_CLASSES:
            values, index = self._table(cls_name)
            for name, k in index.items():
                yield cls_name, name, values[k]

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for cls_name, name, value in self.rows():
                fh.write(f"{cls_name}\t{name}\t{value!r}\n")

    @classmethod
    def read(cls, path) -> WeightVector:
        w = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\r\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise DataError("expected factor_class<TAB>feature_name<TAB>value", path, lineno)
                try:
                    w.set(parts[0], parts[1], float(parts[2]))
                except (KeyError, ValueError) as exc:
                    raise DataError(f"bad weight row ({exc})", path, lineno) from None
        return w


class MentionTable:
    """Per-mention observations indexed 0..n-1 with memoized pair features."""

    def __init__(self, mentions: Sequence[Mention]):
        self.mentions = list(mentions)
        self.ids = [m.mention_id for m in self.mentions]
        self.index = {mid: k for k, mid in enumerate(self.ids)}
        if len(self.index) != len(self.ids):
            raise ValueError("duplicate mention ids")
        self.canonical = [m.canonical.lower() for m in self.mentions]
        self.last = [last_name(m.canonical) for m in self.mentions]
        self._name = [(dict(m.name_bag), sum(v * v for v in m.name_bag.values())) for m in self.mentions]
        self._ctx = [(dict(m.context_bag), sum(v * v for v in m.context_bag.values())) for m in self.mentions]
        self._memo: dict[int, tuple[int, int, int, int]] = {}
        self._dense = None

    def __len__(self):
        return len(self.ids)

    @staticmethod
    def _bin(a, b) -> int:
        (ba, na), (bb, nb) = a, b
        if not na or not nb:
            return 0
        if len(ba) > len(bb):
            ba, bb = bb, ba
        dot = 0
        for t, v in ba.items():
            u = bb.get(t)
            if u:
                dot += v * u
        return min(N_BINS - 1, math.isqrt((100 * dot * dot) // (na * nb)))

    def active(self, i: int, j: int) -> tuple[int, int, int, int]:
        """Indices of the four active pair features of (i, j); symmetric."""
        if i > j:
            i, j = j, i
        key = i * len(self.ids) + j
        feats = self._memo.get(key)
        if feats is None:
            feats = (0 if self.canonical[i] == self.canonical[j] else 1,
                     2 if self.last[i] == self.last[j] else 3,
                     _NAME_BIN0 + self._bin(self._name[i], self._name[j]),
                     _CONTEXT_BIN0 + self._bin(self._ctx[i], self._ctx[j]))
            self._memo[key] = feats
        return feats

    def dense(self):
        """(I, J, F) arrays over all pairs i < j; F has the 4 active feature indices per pair."""
        if self._dense is None:
            n = len(self.ids)
            I, J = np.triu_indices(n, k=1)
            F = np.array([self.active(i, j) for i, j in zip(I.tolist(), J.tolist())],
                         dtype=np.int64).reshape(-1, 4)
            self._dense = (I, J, F)
        return self._dense


def entity_score(size: int, theta: WeightVector) -> float:
    if size <= 0:
        return 0.0
    return sum(theta.entity[k] for k in EntityFeatures(size).active())


def _table_for(mentions) -> MentionTable:
    return mentions if isinstance(mentions, MentionTable) else MentionTable(mentions)


def model_log_score(y: Clustering, mentions, theta: WeightVector) -> float:
    """Unnormalized log density of ``y``; quadratic in the number of mentions."""
    table = _table_for(mentions)
    if set(y.assignment) != set(table.ids):
        raise ValueError("clustering must cover exactly the given mentions")
    I, J, F = table.dense()
    labels = {eid: k for k, eid in enumerate(y.entities)}
    ent = np.array([labels[y.assignment[mid]] for mid in table.ids], dtype=np.int64)
    same = ent[I] == ent[J]
    plus = np.asarray(theta.plus)[F].sum(axis=1) if len(F) else np.zeros(0)
    minus = np.asarray(theta.minus)[F].sum(axis=1) if len(F) else np.zeros(0)
    pair_total = math.fsum(plus[same].tolist()) + math.fsum(minus[~same].tolist())
    return pair_total + math.fsum(entity_score(len(v), theta) for v in y.entities.values())


def pair_gain(table: MentionTable, theta: WeightVector, i: int, j: int) -> float:
    """Score change when pair (i, j) goes from repulsion to attraction."""
    plus, minus = theta.plus, theta.minus
    return sum(plus[k] - minus[k] for k in table.active(i, j))


def move_delta(y: Clustering, m: str, e_dst: str | None, theta: WeightVector, mentions) -> float:
    """Score change of moving ``m`` into entity ``e_dst`` (None = a new entity).

    Touches only the factors of the source and destination entities.
    """
    table = _table_for(mentions)
    if m not in y.assignment or m not in table.index:
        raise KeyError(f"unknown mention {m!r}")
    src = y.assignment[m]
    if e_dst == src:
        raise ValueError("destination equals the current entity")
    if e_dst is not None and e_dst not in y.entities:
        raise KeyError(f"unknown entity {e_dst!r}")
    mi = table.index[m]
    src_members = y.entities[src]
    dst_members = y.entities[e_dst] if e_dst is not None else ()
    delta = 0.0
    for v in dst_members:
        delta += pair_gain(table, theta, mi, table.index[v])
    for u in src_members:
        if u != m:
            delta -= pair_gain(table, theta, mi, table.index[u])
    s, d = len(src_members), len(dst_members)
    delta += entity_score(s - 1, theta) - entity_score(s, theta)
    delta += entity_score(d + 1, theta) - entity_score(d, theta)
    return delta
