"""Pairwise coreference evaluation and the name-string baselines."""

from __future__ import annotations

from collections import Counter
from typing import NamedTuple

from .corpus import Clustering, last_name


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float


def _pairs(n: int) -> int:
    return n * (n - 1) // 2


def pair_counts(pred: Clustering, gold: Clustering) -> tuple[int, int, int]:
    """(true positive, predicted, gold) coreferent pair counts.

    Counted from the contingency table of entity intersections, so the cost
    is linear in the number of mentions.
    """
    if pred.assignment.keys() != gold.assignment.keys():
        raise ValueError("pred and gold must cover the same mentions")
    cells = Counter((eid, gold.assignment[mid]) for mid, eid in pred.assignment.items())
    tp = sum(_pairs(c) for c in cells.values())
    pp = sum(_pairs(len(v)) for v in pred.entities.values())
    gp = sum(_pairs(len(v)) for v in gold.entities.values())
    return tp, pp, gp


def prf_from_counts(tp: int, pp: int, gp: int) -> PRF:
    # vacuous denominators score perfectly so that singletons-vs-singletons is (1, 1, 1)
    p = tp / pp if pp else 1.0
    r = tp / gp if gp else 1.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return PRF(p, r, f)


def pairwise_prf(pred: Clustering, gold: Clustering) -> PRF:
    return prf_from_counts(*pair_counts(pred, gold))


def baseline_unique_name(mentions) -> Clustering:
    """One entity per distinct lowercased canonical string."""
    return Clustering({m.mention_id: "name:" + m.canonical.lower() for m in mentions})


def baseline_last_name(mentions) -> Clustering:
    """One entity per extracted last name."""
    return Clustering({m.mention_id: "last:" + last_name(m.canonical) for m in mentions})


def report_rows(prefix: str, prf: PRF) -> list[tuple[str, float]]:
    return [(f"{prefix}precision", prf.precision), (f"{prefix}recall", prf.recall), (f"{prefix}f1", prf.f1)]


def write_report(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name, value in rows:
            fh.write(f"{name}\t{value:.6f}\n")
