"""SampleRank training against a reference clustering.

Each step draws a proposal from the inference proposer. When the model and
the pairwise-F1 objective disagree about which of the two configurations is
better (a zero model margin counts as disagreement), the weights take a
perceptron step along the feature difference toward the better one. The
chain then accepts or rejects the proposal under the updated model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .corpus import Clustering, Mention
from .metrics import pairwise_prf, prf_from_counts
from .model import EntityFeatures, MentionTable, WeightVector
from .sampler import NEW, CanopyIndex, Chain


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 10
    steps_per_iteration: int = 100_000
    learning_rate: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 0 or self.steps_per_iteration < 0:
            raise ValueError("iterations and steps_per_iteration must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")


def objective(y: Clustering, gold: Clustering) -> float:
    return pairwise_prf(y, gold).f1


def _f1_exact(tp: int, pp: int, gp: int) -> Fraction:
    if pp and gp:
        return Fraction(2 * tp, pp + gp)
    if not pp and not gp:
        return Fraction(1)
    return Fraction(0)


@dataclass
class LogRow:
    iteration: int
    updates: int
    train_pairwise_f1: float

    def __str__(self):
        return f"{self.iteration}\t{self.updates}\t{self.train_pairwise_f1:.6f}"


@dataclass
class SampleRank:
    """Stateful trainer; the chain state persists across iterations."""

    mentions: Sequence[Mention]
    gold: Clustering
    canopies: CanopyIndex | None = None
    config: TrainConfig = field(default_factory=TrainConfig)
    init: WeightVector | None = None
    check_objective: bool = False

    def __post_init__(self):
        self.table = self.mentions if isinstance(self.mentions, MentionTable) else MentionTable(self.mentions)
        if set(self.table.ids) != set(self.gold.assignment):
            raise ValueError("gold must cover exactly the training mentions")
        self.theta = self.init.copy() if self.init is not None else WeightVector.zeros()
        self._theta0 = self.theta.copy()
        self.chain = Chain(self.table, self.theta, self.canopies, self.config.seed, frozen=False)
        labels = {eid: k for k, eid in enumerate(sorted(self.gold.entities))}
        self._gold = [labels[self.gold.assignment[mid]] for mid in self.table.ids]
        self._gp = sum(len(v) * (len(v) - 1) // 2 for v in self.gold.entities.values())
        self._tp, self._pp = self._counts()
        self.updates = 0
        self.steps = 0
        self._acc = [[0.0] * len(self.theta.plus), [0.0] * len(self.theta.minus), [0.0] * len(self.theta.entity)]
        self.log: list[LogRow] = []

    def _counts(self) -> tuple[int, int]:
        tp = pp = 0
        g = self._gold
        for mem in self.chain.members.values():
            pp += len(mem) * (len(mem) - 1) // 2
            cells: dict[int, int] = {}
            for i in mem:
                cells[g[i]] = cells.get(g[i], 0) + 1
            tp += sum(c * (c - 1) // 2 for c in cells.values())
        return tp, pp

    @property
    def train_f1(self) -> float:
        return prf_from_counts(self._tp, self._pp, self._gp).f1

    def _bump(self, which: int, k: int, amount: float) -> None:
        vec = (self.theta.plus, self.theta.minus, self.theta.entity)[which]
        vec[k] += amount
        self._acc[which][k] += self.steps * amount

    def _update(self, m: int, dst: int, c: float) -> None:
        """theta += c * (Phi(after move) - Phi(before move))."""
        self.updates += 1
        ch, table = self.chain, self.table
        src = ch.assign[m]
        smem = ch.members[src]
        dmem = ch.members[dst] if dst != NEW else ()
        for v in dmem:
            for k in table.active(m, v):
                self._bump(0, k, c)
                self._bump(1, k, -c)
        for u in smem:
            if u != m:
                for k in table.active(m, u):
                    self._bump(0, k, -c)
                    self._bump(1, k, c)
        ns, nd = len(smem), len(dmem)
        for size, sign in ((ns, -1), (ns - 1, 1), (nd, -1), (nd + 1, 1)):
            if size > 0:
                for k in EntityFeatures(size).active():
                    self._bump(2, k, sign * c)
        ch.refresh()

    def step(self) -> bool:
        """One SampleRank step; returns True when the weights changed."""
        ch = self.chain
        ch.steps += 1
        self.steps += 1
        m, dst, noop = ch._propose()
        if noop:
            return False
        return self._consider(m, dst)

    def consider(self, m: int, dst: int) -> bool:
        """Run one step on a given move of mention index ``m`` to entity ``dst`` (or NEW)."""
        self.chain.steps += 1
        self.steps += 1
        return self._consider(m, dst)

    def _consider(self, m: int, dst: int) -> bool:
        ch = self.chain
        src = ch.assign[m]
        smem = ch.members[src]
        dmem = ch.members[dst] if dst != NEW else ()
        g = self._gold
        gm = g[m]
        dtp = sum(1 for v in dmem if g[v] == gm) - sum(1 for u in smem if u != m and g[u] == gm)
        dpp = len(dmem) - (len(smem) - 1)
        dobj = _f1_exact(self._tp + dtp, self._pp + dpp, self._gp) - _f1_exact(self._tp, self._pp, self._gp)
        dmodel = ch.delta(m, dst)
        updated = False
        if (dobj > 0 and dmodel <= 0) or (dobj < 0 and dmodel >= 0):
            self._update(m, dst, self.config.learning_rate if dobj > 0 else -self.config.learning_rate)
            dmodel = ch.delta(m, dst)
            updated = True
        if ch.metropolis(dmodel):
            ch.commit(m, dst, dmodel)
            self._tp += dtp
            self._pp += dpp
            if self.check_objective:
                assert (self._tp, self._pp) == self._counts()
        return updated

    def run_iteration(self) -> LogRow:
        before = self.updates
        for _ in range(self.config.steps_per_iteration):
            self.step()
        row = LogRow(len(self.log) + 1, self.updates - before, self.train_f1)
        self.log.append(row)
        return row

    def run(self) -> SampleRank:
        for _ in range(self.config.iterations):
            self.run_iteration()
        return self

    def averaged(self) -> WeightVector:
        """Mean of theta over all steps taken, each weight held for as long as it was in force."""
        u = self.steps
        if not self.updates:
            return self.theta.copy()
        out = []
        for vec, v0, acc in zip((self.theta.plus, self.theta.minus, self.theta.entity),
                                (self._theta0.plus, self._theta0.minus, self._theta0.entity), self._acc):
            out.append([a0 + ((u + 1) * (x - a0) - s) / u for x, a0, s in zip(vec, v0, acc)])
        return WeightVector(*out)


def train(mentions, gold: Clustering, canopies: CanopyIndex | None = None,
          cfg: TrainConfig = TrainConfig(), init: WeightVector | None = None) -> WeightVector:
    return SampleRank(mentions, gold, canopies, cfg, init).run().averaged()
