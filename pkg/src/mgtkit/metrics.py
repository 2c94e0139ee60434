"""Evaluation metrics and run reports.

Classification tasks are scored by accuracy, boundary regression by mean
absolute error. Reports are plain JSON with a fixed field order plus a
plot-ready confusion-matrix CSV; nothing here draws figures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

import numpy as np

from .corpus import Corpus

__all__ = [
    "ConfusionMatrix",
    "RunReport",
    "accuracy",
    "mean_absolute_error",
    "confusion",
    "write_confusion_csv",
    "report_to_dict",
    "emit_report",
]


def _prediction_mapping(preds) -> Mapping:
    # Accepts either a plain {id: value} mapping or any object carrying one
    # in a `values` attribute (the ensemble module's PredictionSet).
    return preds.values if hasattr(preds, "kind") else preds


def _aligned_pairs(preds, gold: Corpus) -> list[tuple]:
    mapping = _prediction_mapping(preds)
    if len(gold) == 0:
        raise ValueError("cannot evaluate on an empty corpus")
    pairs = []
    for doc in gold:
        if doc.label is None:
            raise ValueError(f"document {doc.id!r} has no gold label")
        if doc.id not in mapping:
            raise ValueError(f"missing prediction for document id {doc.id!r}")
        pairs.append((doc.label, mapping[doc.id]))
    return pairs


def accuracy(preds, gold: Corpus) -> float:
    """Fraction of documents whose predicted label equals the gold label."""
    pairs = _aligned_pairs(preds, gold)
    return sum(1 for g, p in pairs if p == g) / len(pairs)


def mean_absolute_error(preds, gold: Corpus) -> float:
    pairs = _aligned_pairs(preds, gold)
    return float(sum(abs(float(p) - float(g)) for g, p in pairs) / len(pairs))


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[g][p] = documents with gold class g predicted as p."""

    n_classes: int
    counts: np.ndarray

    def __post_init__(self) -> None:
        if self.counts.shape != (self.n_classes, self.n_classes):
            raise ValueError("counts must be n_classes x n_classes")
        if (self.counts < 0).any():
            raise ValueError("counts must be nonnegative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(preds, gold: Corpus, n_classes: int) -> ConfusionMatrix:
    if n_classes < 2:
        raise ValueError("need at least two classes")
    counts = np.zeros((n_classes, n_classes), dtype=int)
    for g, p in _aligned_pairs(preds, gold):
        g, p = int(g), int(p)
        if not (0 <= g < n_classes and 0 <= p < n_classes):
            raise ValueError(f"label out of range for {n_classes} classes: {g}, {p}")
        counts[g, p] += 1
    return ConfusionMatrix(n_classes=n_classes, counts=counts)


def write_confusion_csv(matrix: ConfusionMatrix, path) -> None:
    """Rows are gold classes, columns predicted classes."""
    header = "gold," + ",".join(f"pred_{k}" for k in range(matrix.n_classes))
    lines = [header]
    for g in range(matrix.n_classes):
        lines.append(f"{g}," + ",".join(str(int(c)) for c in matrix.counts[g]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class RunReport:
    """Metrics manifest for one run. `components` holds {"name", "metric"}
    entries; `ensemble` holds {"weights", "metric"} or None for single-model
    runs. `timestamp` defaults to None so identical runs serialize
    byte-identically."""

    task: str
    split: str
    components: tuple[dict, ...]
    ensemble: Optional[dict]
    total_documents: int
    confusion_csv_path: Optional[str] = None
    config: dict = field(default_factory=dict)
    timestamp: Optional[str] = None


def report_to_dict(report: RunReport) -> dict:
    return {
        "task": report.task,
        "split": report.split,
        "components": [dict(c) for c in report.components],
        "ensemble": dict(report.ensemble) if report.ensemble is not None else None,
        "total_documents": report.total_documents,
        "confusion_csv_path": report.confusion_csv_path,
        "config": report.config,
        "timestamp": report.timestamp,
    }


def emit_report(
    report: RunReport, path, confusion_matrix: Optional[ConfusionMatrix] = None
) -> None:
    """Write the JSON report; when a confusion matrix is supplied its CSV is
    written to report.confusion_csv_path alongside."""
    if confusion_matrix is not None:
        if report.confusion_csv_path is None:
            raise ValueError("report has no confusion_csv_path to write to")
        write_confusion_csv(confusion_matrix, report.confusion_csv_path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=2)
        fh.write("\n")
