"""Prediction combiners.

Classification components are combined by weighted voting with each weight
equal to that component's dev-split accuracy, used unnormalized (argmax does
not care about scale). Boundary regressors are combined by a weighted average
whose weights are reciprocal dev MAEs normalized to sum 1, so better
components pull harder. Ties always break toward the smallest class id.
"""

from __future__ import annotations

import json
import numbers
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import Corpus
from .metrics import accuracy

__all__ = [
    "PredictionSet",
    "EnsembleSpec",
    "accuracy_weights",
    "inverse_mae_weights",
    "weighted_vote",
    "weighted_average",
    "combine_probs",
    "vote_predictions",
    "average_predictions",
    "combine_prob_predictions",
    "load_prediction_set",
]

KINDS = ("class", "probs", "scalar")

_PROBS_SUM_TOL = 1e-6
_AVG_WEIGHT_TOL = 1e-9


def _is_int(value) -> bool:
    return isinstance(value, numbers.Integral) and not isinstance(value, bool)


@dataclass(frozen=True)
class PredictionSet:
    """One component's predictions keyed by document id.

    kind "class" holds integer class ids, "probs" holds per-class probability
    vectors, "scalar" holds real-valued (boundary index) predictions.
    dev_metric carries the component's dev-split accuracy or MAE when known.
    """

    name: str
    kind: str
    values: Mapping
    dev_metric: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown prediction kind {self.kind!r}")
        for doc_id, value in self.values.items():
            if self.kind == "class":
                if not _is_int(value) or value < 0:
                    raise ValueError(
                        f"class prediction for {doc_id!r} must be a nonnegative integer"
                    )
            elif self.kind == "probs":
                vec = np.asarray(value, dtype=float)
                if vec.ndim != 1 or vec.size == 0:
                    raise ValueError(f"probs for {doc_id!r} must be a flat vector")
                if (vec < 0).any() or abs(vec.sum() - 1.0) > _PROBS_SUM_TOL:
                    raise ValueError(
                        f"probs for {doc_id!r} must be nonnegative and sum to 1"
                    )
            else:
                if not isinstance(value, numbers.Real) or not np.isfinite(value):
                    raise ValueError(f"scalar prediction for {doc_id!r} must be finite")


@dataclass(frozen=True)
class EnsembleSpec:
    components: tuple[str, ...]
    weights: tuple[float, ...]
    rule: str

    def __post_init__(self) -> None:
        if self.rule not in ("vote", "weighted_average"):
            raise ValueError(f"unknown ensemble rule {self.rule!r}")
        if len(self.components) != len(self.weights):
            raise ValueError("need exactly one weight per component")
        if len(self.components) == 0:
            raise ValueError("ensemble needs at least one component")
        if any(w <= 0 for w in self.weights):
            raise ValueError("ensemble weights must be positive")


def _check_weights(n: int, weights) -> np.ndarray:
    arr = np.asarray(weights, dtype=float)
    if arr.ndim != 1 or arr.size != n:
        raise ValueError("need exactly one weight per component")
    if n == 0:
        raise ValueError("need at least one component")
    if (arr <= 0).any() or not np.isfinite(arr).all():
        raise ValueError("weights must be positive and finite")
    return arr


def accuracy_weights(dev_preds: Sequence[PredictionSet], gold: Corpus) -> np.ndarray:
    """Dev accuracy of each component, returned as-is (no normalization)."""
    weights = []
    for pred_set in dev_preds:
        acc = accuracy(pred_set, gold)
        if acc == 0.0:
            raise ValueError(f"zero weight component: {pred_set.name!r} has accuracy 0")
        weights.append(acc)
    if not weights:
        raise ValueError("need at least one component")
    return np.asarray(weights)


def inverse_mae_weights(dev_maes) -> np.ndarray:
    """w_i = (1/mae_i) / sum_j (1/mae_j); smaller MAE, strictly larger weight."""
    maes = np.asarray(dev_maes, dtype=float)
    if maes.ndim != 1 or maes.size == 0:
        raise ValueError("need at least one MAE value")
    if (maes <= 0).any() or not np.isfinite(maes).all():
        raise ValueError("MAE values must be positive and finite")
    inverse = 1.0 / maes
    return inverse / inverse.sum()


def weighted_vote(votes: Sequence[int], weights) -> int:
    """Argmax over classes of summed weights; ties go to the smaller class id."""
    arr = _check_weights(len(votes), weights)
    scores: dict[int, float] = {}
    for vote, weight in zip(votes, arr):
        if not _is_int(vote) or vote < 0:
            raise ValueError("votes must be nonnegative integer class ids")
        scores[int(vote)] = scores.get(int(vote), 0.0) + float(weight)
    dense = np.zeros(max(scores) + 1)
    for class_id, score in scores.items():
        dense[class_id] = score
    # argmax returns the first maximum, i.e. the smallest class id on ties;
    # absent classes hold score 0 and can never beat a positive-weight vote.
    return int(dense.argmax())


def weighted_average(values: Sequence[float], weights) -> float:
    arr = _check_weights(len(values), weights)
    if abs(arr.sum() - 1.0) > _AVG_WEIGHT_TOL:
        raise ValueError("weighted_average requires weights summing to 1")
    return float(np.asarray(values, dtype=float) @ arr)


def combine_probs(prob_rows: Sequence, weights) -> int:
    arr = _check_weights(len(prob_rows), weights)
    rows = [np.asarray(r, dtype=float) for r in prob_rows]
    n_classes = rows[0].size
    if any(r.ndim != 1 or r.size != n_classes for r in rows):
        raise ValueError("class-count mismatch across probability components")
    combined = sum(w * r for w, r in zip(arr, rows))
    return int(np.asarray(combined).argmax())


def _shared_ids(components: Sequence[PredictionSet]) -> list[str]:
    if not components:
        raise ValueError("need at least one component")
    first = list(components[0].values.keys())
    reference = set(first)
    for comp in components[1:]:
        if set(comp.values.keys()) != reference:
            raise ValueError("components disagree on document coverage")
    return first


def _require_kind(components: Sequence[PredictionSet], kind: str) -> None:
    for comp in components:
        if comp.kind != kind:
            raise ValueError(f"component {comp.name!r} is not kind {kind!r}")


def vote_predictions(
    components: Sequence[PredictionSet], weights, name: str = "ensemble"
) -> PredictionSet:
    _require_kind(components, "class")
    ids = _shared_ids(components)
    values = {
        doc_id: weighted_vote([c.values[doc_id] for c in components], weights)
        for doc_id in ids
    }
    return PredictionSet(name=name, kind="class", values=values)


def average_predictions(
    components: Sequence[PredictionSet], weights, name: str = "ensemble"
) -> PredictionSet:
    _require_kind(components, "scalar")
    ids = _shared_ids(components)
    values = {
        doc_id: weighted_average([c.values[doc_id] for c in components], weights)
        for doc_id in ids
    }
    return PredictionSet(name=name, kind="scalar", values=values)


def combine_prob_predictions(
    components: Sequence[PredictionSet], weights, name: str = "ensemble"
) -> PredictionSet:
    _require_kind(components, "probs")
    ids = _shared_ids(components)
    values = {
        doc_id: combine_probs([c.values[doc_id] for c in components], weights)
        for doc_id in ids
    }
    return PredictionSet(name=name, kind="class", values=values)


def load_prediction_set(
    path, name: str, kind: str, dev_metric: Optional[float] = None
) -> PredictionSet:
    """Read a predictions JSONL file: {"id", "label"} rows for class and
    scalar kinds, {"id", "probs"} rows for probability kinds. A first line
    holding a {"_meta": ...} object is skipped."""
    if kind not in KINDS:
        raise ValueError(f"unknown prediction kind {kind!r}")
    field = "probs" if kind == "probs" else "label"
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            where = f"{path}: line {line_no}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{where}: invalid JSON: {exc.msg}") from exc
            if line_no == 1 and isinstance(obj, dict) and "_meta" in obj:
                continue
            if not isinstance(obj, dict) or "id" not in obj or field not in obj:
                raise ValueError(f"{where}: expected an object with 'id' and {field!r}")
            doc_id = str(obj["id"])
            if doc_id in values:
                raise ValueError(f"{where}: duplicate prediction id {doc_id!r}")
            values[doc_id] = obj[field]
    return PredictionSet(name=name, kind=kind, values=values, dev_metric=dev_metric)
