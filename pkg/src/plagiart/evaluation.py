"""Retrieval mAP with query-dependent positive policies, plus the accuracy
breakdown used for the method-comparison table.

Positive policy: van_gogh and plagiarized queries count van_gogh database
items as positives; 'other' queries count 'other' items as positives with
van_gogh as negatives.  Plagiarized database items (when present) are
negatives for every query label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from plagiart.retrieval import RankedList
from plagiart.store import Dataset


class NoPositivesError(ValueError):
    """AP is undefined when a query has no positive database items."""


@dataclass
class APResult:
    query_id: str
    ap: float
    # (rank k, precision at k, incremental recall at k) for every rank
    pr_points: list[tuple[int, float, float]]


@dataclass
class EvalReport:
    """Per-group accuracies, overall accuracy, and retrieval mAP."""

    method: str
    accuracy_van_gogh: float | None
    accuracy_plagiarized: float | None
    accuracy_other: float | None
    accuracy_overall: float
    map: float
    num_queries: int = 0
    num_no_positive_queries: int = 0
    per_query_ap: dict[str, float] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.__dict__, indent=2) + "\n")

    @classmethod
    def from_json(cls, path: str | Path) -> "EvalReport":
        return cls(**json.loads(Path(path).read_text()))


TABLE_COLUMNS = ("method", "Van Gogh", "Plagiarized", "Other", "Accuracy", "mAP")


def positives_for(query_label: str, db: Dataset) -> np.ndarray:
    """Boolean relevance mask over the database for one query label."""
    if len(db) == 0:
        raise ValueError("empty database")
    if query_label in ("van_gogh", "plagiarized"):
        wanted = "van_gogh"
    elif query_label == "other":
        wanted = "other"
    else:
        raise ValueError(f"unknown query label {query_label!r}")
    return np.array([rec.label == wanted for rec in db.records], dtype=bool)


def average_precision(rl: RankedList, positives: dict[str, bool] | np.ndarray,
                      db_ids: list[str] | None = None) -> APResult:
    """AP over the full ranking with delta-recall 1/n_pos at each positive hit.

    ``positives`` is either a mapping from db id to relevance or a boolean
    mask aligned with ``db_ids``.
    """
    if isinstance(positives, dict):
        relevant = positives
    else:
        mask = np.asarray(positives, dtype=bool)
        if db_ids is None:
            raise ValueError("db_ids required when positives is a mask")
        if len(mask) != len(db_ids):
            raise ValueError(f"mask length {len(mask)} != db size {len(db_ids)}")
        relevant = {i: bool(m) for i, m in zip(db_ids, mask)}
    if len(relevant) != len(rl.entries):
        raise ValueError(
            f"mask length {len(relevant)} != ranking length {len(rl.entries)}"
        )
    n_pos = sum(1 for v in relevant.values() if v)
    if n_pos == 0:
        raise NoPositivesError(f"query {rl.query_id!r} has no positive database items")
    ap = 0.0
    hits = 0
    pr_points = []
    for k, (db_id, _) in enumerate(rl.entries, start=1):
        hit = relevant[db_id]
        if hit:
            hits += 1
        precision = hits / k
        delta_recall = (1.0 / n_pos) if hit else 0.0
        ap += precision * delta_recall
        pr_points.append((k, precision, delta_recall))
    return APResult(rl.query_id, ap, pr_points)


def mean_ap(results: list[APResult]) -> float:
    if not results:
        raise ValueError("mean AP of an empty result list is undefined")
    return float(sum(r.ap for r in results) / len(results))


def accuracy_breakdown(predictions: list[tuple[str, str]],
                       binary_of_label) -> dict[str, float | None]:
    """Per-source-label and overall accuracy of binary predictions.

    ``predictions`` pairs each query's dataset label with the predicted
    binary label; ``binary_of_label`` maps dataset labels to ground truth.
    Empty groups yield None rather than zero.
    """
    if not predictions:
        raise ValueError("no predictions")
    groups: dict[str, list[bool]] = {"van_gogh": [], "plagiarized": [], "other": []}
    correct_all = 0
    for true_label, predicted in predictions:
        ok = predicted == binary_of_label(true_label)
        groups[true_label].append(ok)
        correct_all += ok
    out: dict[str, float | None] = {}
    for name, hits in groups.items():
        out[f"accuracy_{name}"] = (sum(hits) / len(hits)) if hits else None
    out["accuracy_overall"] = correct_all / len(predictions)
    return out


def render_table_row(report: EvalReport) -> str:
    """One markdown row in the method-comparison column schema."""
    def pct(v: float | None) -> str:
        return "--" if v is None else f"{100.0 * v:.1f}%"

    return (f"| {report.method} | {pct(report.accuracy_van_gogh)} "
            f"| {pct(report.accuracy_plagiarized)} | {pct(report.accuracy_other)} "
            f"| {pct(report.accuracy_overall)} | {pct(report.map)} |")


def render_table(reports: list[EvalReport]) -> str:
    header = "| " + " | ".join(TABLE_COLUMNS) + " |"
    sep = "|" + "---|" * len(TABLE_COLUMNS)
    return "\n".join([header, sep] + [render_table_row(r) for r in reports])
