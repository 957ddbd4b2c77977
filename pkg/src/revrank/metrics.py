"""Classification, correlation, agreement, and ranking metrics.

Pure functions over small lists; every zero-denominator case resolves to the
documented convention (0.0, or 1.0 for perfect degenerate agreement) instead
of raising, except where the quantity is genuinely undefined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ContractError, DegenerateInputError
from .ranking import Ranking


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def add(self, truth: bool, predicted: bool) -> "ConfusionCounts":
        if truth and predicted:
            return ConfusionCounts(self.tp + 1, self.tn, self.fp, self.fn)
        if not truth and not predicted:
            return ConfusionCounts(self.tp, self.tn + 1, self.fp, self.fn)
        if not truth and predicted:
            return ConfusionCounts(self.tp, self.tn, self.fp + 1, self.fn)
        return ConfusionCounts(self.tp, self.tn, self.fp, self.fn + 1)


def confusion_from_predictions(truths: Sequence[bool], predictions: Sequence[bool]) -> ConfusionCounts:
    if len(truths) != len(predictions):
        raise ContractError("label lists must have equal length")
    tp = tn = fp = fn = 0
    for truth, pred in zip(truths, predictions):
        if truth and pred:
            tp += 1
        elif not truth and not pred:
            tn += 1
        elif not truth and pred:
            fp += 1
        else:
            fn += 1
    return ConfusionCounts(tp, tn, fp, fn)


def accuracy(counts: ConfusionCounts) -> float:
    """(tp + tn) / total."""
    if counts.total == 0:
        raise DegenerateInputError("accuracy is undefined on zero instances")
    return (counts.tp + counts.tn) / counts.total


def mcc(counts: ConfusionCounts) -> float:
    """Matthews correlation coefficient; any zero factor yields 0.0."""
    if counts.total == 0:
        raise DegenerateInputError("MCC is undefined on zero instances")
    tp, tn, fp, fn = counts.tp, counts.tn, counts.fp, counts.fn
    denom_sq = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom_sq == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denom_sq)


def pearson_r_flagged(x: Sequence[float], y: Sequence[float]) -> tuple[float, bool]:
    """Product-moment correlation plus a flag for constant (degenerate) input."""
    if len(x) != len(y):
        raise ContractError("correlation inputs must have equal length")
    if len(x) < 2:
        raise ContractError("correlation needs at least 2 points")
    n = len(x)
    mean_x = math.fsum(x) / n
    mean_y = math.fsum(y) / n
    dx = [xi - mean_x for xi in x]
    dy = [yi - mean_y for yi in y]
    var_x = math.fsum(d * d for d in dx)
    var_y = math.fsum(d * d for d in dy)
    if var_x == 0.0 or var_y == 0.0:
        return 0.0, True
    cov = math.fsum(a * b for a, b in zip(dx, dy))
    return max(-1.0, min(1.0, cov / math.sqrt(var_x * var_y))), False


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    return pearson_r_flagged(x, y)[0]


def average_ranks(x: Sequence[float]) -> list[float]:
    """Fractional ranks starting at 1; ties share their average rank."""
    order = sorted(range(len(x)), key=lambda i: x[i])
    ranks = [0.0] * len(x)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and x[order[j + 1]] == x[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman_rho_flagged(x: Sequence[float], y: Sequence[float]) -> tuple[float, bool]:
    """Pearson correlation of average-tie fractional ranks."""
    return pearson_r_flagged(average_ranks(x), average_ranks(y))


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    return spearman_rho_flagged(x, y)[0]


def ndcg(predicted: Ranking, relevance: Sequence[float]) -> float:
    """Discounted-cumulative-gain ratio against the ideal ordering."""
    if len(relevance) != predicted.n:
        raise ContractError("relevance length must match the ranking")
    if all(r == 0 for r in relevance):
        raise DegenerateInputError("NDCG is undefined for all-zero relevance")
    dcg = math.fsum(
        relevance[item] / math.log2(rank + 1)
        for rank, item in enumerate(predicted.order, start=1)
    )
    ideal = sorted(relevance, reverse=True)
    idcg = math.fsum(g / math.log2(rank + 1) for rank, g in enumerate(ideal, start=1))
    return dcg / idcg


def mrr(predicted: Ranking, target_index: int) -> float:
    """Reciprocal of the 1-based rank of the target item."""
    if not 0 <= target_index < predicted.n:
        raise ContractError("target_index out of range")
    return 1.0 / (predicted.position(target_index) + 1)


def top1(predicted: Ranking, target_index: int) -> int:
    """1 iff the target item is ranked first."""
    if not 0 <= target_index < predicted.n:
        raise ContractError("target_index out of range")
    return 1 if predicted.order[0] == target_index else 0


def cohens_kappa_flagged(a: Sequence, b: Sequence) -> tuple[float, bool]:
    """Chance-corrected agreement between two label lists.

    Degenerate case p_e = 1 (both raters constant on one label) yields 1.0
    for perfect agreement, else 0.0, with the flag set.
    """
    if len(a) != len(b):
        raise ContractError("label lists must have equal length")
    if not a:
        raise ContractError("kappa needs at least one instance")
    n = len(a)
    observed = sum(1 for x, y in zip(a, b) if x == y) / n
    labels = set(a) | set(b)
    expected = 0.0
    for label in labels:
        pa = sum(1 for x in a if x == label) / n
        pb = sum(1 for y in b if y == label) / n
        expected += pa * pb
    if expected == 1.0:
        return (1.0 if observed == 1.0 else 0.0), True
    return (observed - expected) / (1.0 - expected), False


def cohens_kappa(a: Sequence, b: Sequence) -> float:
    return cohens_kappa_flagged(a, b)[0]
