"""Canopy-restricted Metropolis-Hastings MAP inference over clusterings.

A :class:`Chain` owns one integer-indexed clustering state. Each step moves a
single mention, so scoring a proposal touches only the factors of the source
and destination entities.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .corpus import Clustering, Mention, last_name
from .model import MentionTable, WeightVector

logger = logging.getLogger(__name__)

CANOPY_PROB = 0.8
NEW = -1


@dataclass(frozen=True)
class CanopyIndex:
    """A list of canopies; each canopy maps a key to an overlapping mention set."""

    canopies: tuple[dict[str, tuple[str, ...]], ...]
    names: tuple[str, ...] = ()

    def __len__(self):
        return len(self.canopies)

    def shares_set(self, a: str, b: str) -> bool:
        return any(a in s and b in s for c in self.canopies for s in c.values())


def build_canopies(mentions: Sequence[Mention]) -> CanopyIndex:
    """Canonical-string and last-name groupings of ``mentions``."""
    by_name: dict[str, list[str]] = {}
    by_last: dict[str, list[str]] = {}
    for m in mentions:
        by_name.setdefault(m.canonical.lower(), []).append(m.mention_id)
        by_last.setdefault(last_name(m.canonical), []).append(m.mention_id)
    freeze = lambda d: {k: tuple(sorted(v)) for k, v in sorted(d.items())}
    return CanopyIndex((freeze(by_name), freeze(by_last)), ("canonical", "last_name"))


@dataclass(frozen=True)
class Move:
    mention: str
    destination: Optional[str]  # None: a fresh, empty entity
    noop: bool = False


@dataclass
class TraceRow:
    step: int
    score: float
    acceptance_rate: float

    def __str__(self):
        return f"{self.step}\t{self.score!r}\t{self.acceptance_rate!r}"


def _as_rng(rng) -> random.Random:
    if isinstance(rng, random.Random):
        return rng
    return random.Random(rng)


class Chain:
    """One MH chain. ``score`` is tracked relative to the starting state.

    With ``frozen=True`` pair gains are memoized, which is only valid while
    ``theta`` does not change; learners pass ``frozen=False`` and call
    :meth:`refresh` after each weight update.
    """

    def __init__(self, mentions, theta: WeightVector, canopies: CanopyIndex | None = None,
                 rng=0, clustering: Clustering | None = None, frozen: bool = True,
                 debug: bool = False):
        self.table = mentions if isinstance(mentions, MentionTable) else MentionTable(mentions)
        if not len(self.table):
            raise ValueError("a chain needs at least one mention")
        self.n = len(self.table)
        self.theta = theta
        self.frozen = frozen
        self.debug = debug
        self.rng = _as_rng(rng)
        if canopies is None:
            canopies = build_canopies(self.table.mentions)
        idx = self.table.index
        self._canopies = [[[idx[m] for m in s] for _, s in sorted(c.items())] for c in canopies.canopies]
        self._canopies = [c for c in self._canopies if c]
        self._gcache: dict[int, float] = {}
        self.refresh()
        self._init_state(clustering)
        self.steps = 0
        self.accepted = 0
        self.score = 0.0
        self.best_score = 0.0
        self.best_assign = list(self.assign)

    # -- state ---------------------------------------------------------------

    def _init_state(self, clustering):
        self.assign = list(range(self.n))
        if clustering is not None:
            if set(clustering.assignment) != set(self.table.ids):
                raise ValueError("initial clustering must cover exactly the chain's mentions")
            label = {eid: k for k, eid in enumerate(sorted(clustering.entities))}
            self.assign = [label[clustering.assignment[mid]] for mid in self.table.ids]
        self.members: dict[int, set[int]] = {}
        for i, e in enumerate(self.assign):
            self.members.setdefault(e, set()).add(i)
        self.ents = sorted(self.members)
        self.pos = {e: k for k, e in enumerate(self.ents)}
        self._next = (max(self.ents) + 1) if self.ents else 0

    def refresh(self) -> None:
        th = self.theta
        self._diff = [p - m for p, m in zip(th.plus, th.minus)]
        e = th.entity
        self._ent = (0.0, e[0], e[1], e[1] + e[2], e[1] + e[2] + e[3])
        self._gcache.clear()

    def _es(self, s: int) -> float:
        ent = self._ent
        if s <= 2:
            return ent[s]
        return ent[3] if s <= 4 else ent[4]

    def gain(self, i: int, j: int) -> float:
        if self.frozen:
            key = i * self.n + j if i < j else j * self.n + i
            g = self._gcache.get(key)
            if g is None:
                d = self._diff
                a, b, c, e = self.table.active(i, j)
                g = self._gcache[key] = d[a] + d[b] + d[c] + d[e]
            return g
        d = self._diff
        a, b, c, e = self.table.active(i, j)
        return d[a] + d[b] + d[c] + d[e]

    def clustering(self, assign=None) -> Clustering:
        assign = self.assign if assign is None else assign
        ids = self.table.ids
        return Clustering({ids[i]: f"E{e}" for i, e in enumerate(assign)}).relabeled()

    def best_clustering(self) -> Clustering:
        return self.clustering(self.best_assign)

    def check(self) -> None:
        seen = 0
        for e, mem in self.members.items():
            assert mem, f"empty entity {e}"
            assert all(self.assign[i] == e for i in mem)
            assert self.ents[self.pos[e]] == e
            seen += len(mem)
        assert seen == self.n and len(self.ents) == len(self.members)

    # -- proposals -----------------------------------------------------------

    def _propose(self) -> tuple[int, int, bool]:
        rnd = self.rng.random
        if self._canopies and rnd() < CANOPY_PROB:
            canopy = self._canopies[int(rnd() * len(self._canopies))]
            s = canopy[int(rnd() * len(canopy))]
            ma = s[int(rnd() * len(s))]
            mb = s[int(rnd() * len(s))]
            dst = self.assign[mb]
            return ma, dst, dst == self.assign[ma]
        m = int(rnd() * self.n)
        k = int(rnd() * (len(self.ents) + 1))
        src = self.assign[m]
        if k == len(self.ents):
            return m, NEW, len(self.members[src]) == 1
        dst = self.ents[k]
        return m, dst, dst == src

    def propose(self) -> Move:
        m, dst, noop = self._propose()
        ids = self.table.ids
        dest = None if dst == NEW else f"E{dst}"
        if noop and dst == NEW:
            dest = f"E{self.assign[m]}"
        return Move(ids[m], dest, noop)

    def delta(self, m: int, dst: int) -> float:
        src = self.assign[m]
        smem = self.members[src]
        d = 0.0
        gain = self.gain
        if dst != NEW:
            dmem = self.members[dst]
            for v in dmem:
                d += gain(m, v)
            nd = len(dmem)
        else:
            nd = 0
        for u in smem:
            if u != m:
                d -= gain(m, u)
        es = self._es
        ns = len(smem)
        return d + es(ns - 1) - es(ns) + es(nd + 1) - es(nd)

    def apply(self, m: int, dst: int) -> None:
        src = self.assign[m]
        smem = self.members[src]
        if dst == NEW:
            dst = self._next
            self._next += 1
            self.members[dst] = set()
            self.pos[dst] = len(self.ents)
            self.ents.append(dst)
        smem.discard(m)
        self.members[dst].add(m)
        self.assign[m] = dst
        if not smem:
            del self.members[src]
            k = self.pos.pop(src)
            last = self.ents.pop()
            if last != src:
                self.ents[k] = last
                self.pos[last] = k

    def step(self) -> bool:
        """One MH step; no-op proposals count as rejections."""
        self.steps += 1
        m, dst, noop = self._propose()
        if noop:
            return False
        d = self.delta(m, dst)
        if not self.metropolis(d):
            return False
        self.commit(m, dst, d)
        return True

    def metropolis(self, d: float) -> bool:
        """Accept with probability min(1, exp(d)); draws no randomness when d >= 0."""
        return d >= 0 or self.rng.random() < math.exp(d)

    def commit(self, m: int, dst: int, d: float) -> None:
        """Apply an accepted move whose score change is ``d``."""
        self.apply(m, dst)
        self.accepted += 1
        self.score += d
        if self.score > self.best_score:
            self.best_score = self.score
            self.best_assign = list(self.assign)
        if self.debug:
            self.check()

    def run(self, steps: int, report_every: int = 0,
            on_report: Callable[[TraceRow], None] | None = None) -> list[TraceRow]:
        trace = []
        step = self.step
        if not report_every:
            for _ in range(steps):
                step()
            return trace
        for k in range(1, steps + 1):
            step()
            if k % report_every == 0 or k == steps:
                row = TraceRow(self.steps, self.score, self.accepted / self.steps)
                trace.append(row)
                if on_report:
                    on_report(row)
        return trace


def mh_step(chain: Chain) -> bool:
    return chain.step()


@dataclass
class InferResult:
    clustering: Clustering
    best_score: float
    seed: object
    steps: int
    accepted: int
    trace: list[TraceRow] = field(default_factory=list)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.steps if self.steps else 0.0


def infer(mentions, theta: WeightVector, steps: int, rng=0, canopies: CanopyIndex | None = None,
          report_every: int = 0, on_report=None, debug: bool = False) -> InferResult:
    """MAP search from the all-singletons state; returns the best state visited."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    chain = Chain(mentions, theta, canopies, rng, debug=debug)
    trace = chain.run(steps, report_every, on_report)
    return InferResult(chain.best_clustering(), chain.best_score, rng, chain.steps, chain.accepted, trace)


def infer_chains(mentions, theta: WeightVector, steps: int, seeds: Sequence[int],
                 canopies: CanopyIndex | None = None, report_every: int = 0) -> InferResult:
    """Independent chains (one per seed), keeping the highest-scoring result."""
    table = mentions if isinstance(mentions, MentionTable) else MentionTable(mentions)
    best = None
    for seed in seeds:
        res = infer(table, theta, steps, seed, canopies, report_every)
        logger.info("chain seed=%s best_score=%.6f acceptance=%.4f", seed, res.best_score, res.acceptance_rate)
        if best is None or res.best_score > best.best_score:
            best = res
    return best
