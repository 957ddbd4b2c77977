"""Evaluation drivers and report plumbing.

Classification reports carry accuracy and MCC overall and broken down by
revision type and distance; ranking reports carry per-chain-averaged
correlation and rank metrics. Reports serialize as line-delimited records
and render as aligned-column text.
"""

from __future__ import annotations

import json
import random
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .corpus import RevisionChain, RevisionType
from .errors import ContractError, ParseError
from .metrics import (
    ConfusionCounts,
    accuracy,
    confusion_from_predictions,
    mcc,
    mrr,
    ndcg,
    pearson_r,
    spearman_rho,
    top1,
)
from .models import PairModel, predict_prob
from .pairs import ClaimPair, PairDataset
from .ranking import Ranking

OVERALL = "overall"
DISTANCE_CAP = 6  # distances beyond this bucket into "6+"

TYPE_GROUP_ORDER = [t.value for t in RevisionType] + ["multi"]


@dataclass(frozen=True)
class ReportRow:
    metric: str
    group_kind: str  # overall | revision_type | distance | per_category
    group: str
    value: float
    n: int
    seed: int | None = None
    fold: str | None = None


@dataclass
class EvaluationReport:
    rows: list[ReportRow] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def get(self, metric: str, group_kind: str = OVERALL, group: str = "all",
            fold: str | None = None) -> float:
        for row in self.rows:
            if (
                row.metric == metric
                and row.group_kind == group_kind
                and row.group == group
                and (fold is None or row.fold == fold)
            ):
                return row.value
        raise KeyError(f"no row for {metric}/{group_kind}/{group}")


def distance_group(distance: int) -> str:
    return str(distance) if distance < DISTANCE_CAP else f"{DISTANCE_CAP}+"


def evaluate_classification(
    model: PairModel | Callable[[ClaimPair], float],
    test: PairDataset,
    seed: int | None = None,
    fold: str | None = None,
) -> EvaluationReport:
    """Accuracy and MCC overall and per revision type / distance group.

    ``model`` may be a PairModel or any callable mapping a pair to
    P(second better).
    """
    if not test.pairs:
        raise ContractError("cannot evaluate on an empty dataset")
    n_true = sum(1 for p in test.pairs if p.label)
    if n_true * 2 != len(test.pairs):
        raise ContractError("evaluation expects a balanced test set")

    score = model if callable(model) else (lambda p: predict_prob(model, p))
    truths = [p.label for p in test.pairs]
    predictions = [score(p) > 0.5 for p in test.pairs]

    report = EvaluationReport()

    def emit(counts: ConfusionCounts, group_kind: str, group: str) -> None:
        report.rows.append(
            ReportRow("accuracy", group_kind, group, accuracy(counts), counts.total, seed, fold)
        )
        report.rows.append(
            ReportRow("mcc", group_kind, group, mcc(counts), counts.total, seed, fold)
        )
        denom_sq = (
            (counts.tp + counts.fp)
            * (counts.tp + counts.fn)
            * (counts.tn + counts.fp)
            * (counts.tn + counts.fn)
        )
        if denom_sq == 0:
            report.notes.append(
                f"mcc zero-denominator convention (0.0) applied for {group_kind}:{group}"
            )

    emit(confusion_from_predictions(truths, predictions), OVERALL, "all")

    by_type: dict[str, list[int]] = defaultdict(list)
    by_distance: dict[str, list[int]] = defaultdict(list)
    for i, pair in enumerate(test.pairs):
        by_type[pair.type_key].append(i)
        by_distance[distance_group(pair.distance)].append(i)
    for group in sorted(by_type, key=lambda g: TYPE_GROUP_ORDER.index(g)):
        idx = by_type[group]
        emit(
            confusion_from_predictions([truths[i] for i in idx], [predictions[i] for i in idx]),
            "revision_type",
            group,
        )
    for group in sorted(by_distance, key=lambda g: int(g.rstrip("+"))):
        idx = by_distance[group]
        emit(
            confusion_from_predictions([truths[i] for i in idx], [predictions[i] for i in idx]),
            "distance",
            group,
        )
    return report


RANKING_METRICS = ("pearson_r", "spearman_rho", "top1", "ndcg", "mrr")


def linear_gains(n: int) -> list[float]:
    """Gains 1..n: the 1-based version number, latest highest."""
    return [float(i + 1) for i in range(n)]


def exponential_gains(n: int) -> list[float]:
    return [float(2 ** (i + 1) - 1) for i in range(n)]


def evaluate_ranking(
    rank_fn: Callable[[RevisionChain], Ranking],
    chains: Sequence[RevisionChain],
    gains: str = "linear",
    seed: int | None = None,
    fold: str | None = None,
) -> EvaluationReport:
    """Per-chain rank metrics, averaged without weighting across chains.

    The true order is the version order (latest best); predicted ranks are
    measured against true rank(v_i) = i.
    """
    if not chains:
        raise ContractError("cannot evaluate on zero chains")
    gain_fn = linear_gains if gains == "linear" else exponential_gains
    sums = {metric: 0.0 for metric in RANKING_METRICS}
    for chain in chains:
        n = len(chain.versions)
        if n < 2:
            raise ContractError(f"chain {chain.chain_id!r} has fewer than 2 versions")
        ranking = rank_fn(chain)
        if ranking.n != n:
            raise ContractError(f"ranking size mismatch on chain {chain.chain_id!r}")
        predicted_rank = [0.0] * n
        for pos, item in enumerate(ranking.order):
            predicted_rank[item] = float(n - 1 - pos)
        true_rank = [float(i) for i in range(n)]
        sums["pearson_r"] += pearson_r(predicted_rank, true_rank)
        sums["spearman_rho"] += spearman_rho(predicted_rank, true_rank)
        sums["top1"] += top1(ranking, n - 1)
        sums["ndcg"] += ndcg(ranking, gain_fn(n))
        sums["mrr"] += mrr(ranking, n - 1)
    report = EvaluationReport()
    for metric in RANKING_METRICS:
        report.rows.append(
            ReportRow(metric, OVERALL, "all", sums[metric] / len(chains), len(chains), seed, fold)
        )
    return report


def random_rank_fn(seed: int) -> Callable[[RevisionChain], Ranking]:
    rng = random.Random(seed)

    def rank(chain: RevisionChain) -> Ranking:
        order = list(range(len(chain.versions)))
        rng.shuffle(order)
        return Ranking(tuple(order))

    return rank


def merge_reports(reports: Sequence[EvaluationReport]) -> EvaluationReport:
    merged = EvaluationReport()
    for rep in reports:
        merged.rows.extend(rep.rows)
        merged.notes.extend(rep.notes)
    return merged


def aggregate_report(reports: Sequence[EvaluationReport], fold: str = "mean") -> EvaluationReport:
    """Mean of every (metric, group) across runs/folds, keeping per-run rows."""
    if not reports:
        raise ContractError("nothing to aggregate")
    merged = merge_reports(reports)
    grouped: dict[tuple[str, str, str], list[ReportRow]] = defaultdict(list)
    order: list[tuple[str, str, str]] = []
    for row in merged.rows:
        key = (row.metric, row.group_kind, row.group)
        if key not in grouped:
            order.append(key)
        grouped[key].append(row)
    out = EvaluationReport(rows=list(merged.rows), notes=list(merged.notes))
    for key in order:
        rows = grouped[key]
        metric, group_kind, group = key
        out.rows.append(
            ReportRow(
                metric,
                group_kind,
                group,
                sum(r.value for r in rows) / len(rows),
                sum(r.n for r in rows),
                None,
                fold,
            )
        )
    return out


def write_report(report: EvaluationReport, path: str | Path, header_comments: tuple[str, ...] = ()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for comment in header_comments:
            fh.write(f"# {comment}\n")
        for note in report.notes:
            fh.write(f"# note: {note}\n")
        for row in report.rows:
            record = {
                "metric": row.metric,
                "group": f"{row.group_kind}:{row.group}" if row.group_kind != OVERALL else OVERALL,
                "value": row.value,
                "n": row.n,
                "seed": row.seed,
                "fold": row.fold,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_report(path: str | Path) -> EvaluationReport:
    report = EvaluationReport()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("# note: "):
                    report.notes.append(line[len("# note: ") :])
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid report record: {exc.msg}", line_no) from exc
            group = record["group"]
            if group == OVERALL:
                group_kind, group_name = OVERALL, "all"
            else:
                group_kind, group_name = group.split(":", 1)
            report.rows.append(
                ReportRow(
                    record["metric"],
                    group_kind,
                    group_name,
                    float(record["value"]),
                    int(record["n"]),
                    record.get("seed"),
                    record.get("fold"),
                )
            )
    return report


def render_report(report: EvaluationReport, title: str = "") -> str:
    """Aligned-column text rendering, aggregate rows first."""
    lines: list[str] = []
    if title:
        lines.append(title)
        lines.append("=" * len(title))
    header = f"{'metric':<14}{'group':<28}{'value':>10}{'n':>10}  {'seed':>6}  {'fold':<12}"
    lines.append(header)
    lines.append("-" * len(header))

    def sort_key(row: ReportRow):
        fold_rank = 0 if row.fold == "mean" else 1
        kind_rank = {OVERALL: 0, "revision_type": 1, "distance": 2}.get(row.group_kind, 3)
        return (fold_rank, kind_rank)

    for row in sorted(report.rows, key=sort_key):
        group = row.group if row.group_kind == OVERALL else f"{row.group_kind}:{row.group}"
        seed = "" if row.seed is None else str(row.seed)
        fold = row.fold or ""
        lines.append(
            f"{row.metric:<14}{group:<28}{row.value:>10.4f}{row.n:>10}  {seed:>6}  {fold:<12}"
        )
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"
