"""Human-to-machine boundary prediction.

Each component featurizes a document, applies a linear regressor to get a raw
real-valued word index, snaps it to the nearest paragraph start, and rounds
and clamps it into [0, word_count]. An inverse-dev-MAE weighted average
combines the post-processed component predictions, and the combined value is
rounded and clamped once more to give the final integer index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .corpus import Corpus, Document, paragraph_starts, tokenize_words
from .ensemble import (
    EnsembleSpec,
    PredictionSet,
    average_predictions,
    inverse_mae_weights,
)
from .features import (
    EmbeddingSet,
    Featurizer,
    PpmiModel,
    TfidfConfig,
    TfidfModel,
    featurize,
    fit_ppmi,
    fit_tfidf,
    load_embeddings,
    transform_ppmi,
    transform_tfidf,
)
from .metrics import mean_absolute_error
from .regress import ElasticNetConfig, RegressorModel, fit_elasticnet, fit_ols, predict

__all__ = [
    "BoundaryComponent",
    "BoundaryPipeline",
    "predict_raw",
    "snap_to_paragraph",
    "clip_round",
    "round_half_away",
    "component_predictions",
    "run_pipeline",
    "evaluate_boundary",
    "fit_boundary_component",
    "build_pipeline",
]

# TF-IDF/PPMI training matrices routinely have more features than documents,
# which makes plain normal equations exactly singular, so pipeline OLS
# defaults to a tiny ridge term instead of 0.
PIPELINE_RIDGE_EPS = 1e-6


@dataclass(frozen=True)
class BoundaryComponent:
    name: str
    featurizer: Featurizer
    regressor: RegressorModel


@dataclass(frozen=True)
class BoundaryPipeline:
    components: tuple[BoundaryComponent, ...]
    ensemble: EnsembleSpec
    snap: bool = True
    clip: bool = True

    def __post_init__(self) -> None:
        if len(self.components) == 0:
            raise ValueError("pipeline needs at least one component")
        if self.ensemble.rule != "weighted_average":
            raise ValueError("boundary ensembles combine by weighted_average")
        names = tuple(c.name for c in self.components)
        if self.ensemble.components != names:
            raise ValueError("ensemble component names do not match pipeline")


def predict_raw(component: BoundaryComponent, doc: Union[Document, str]) -> float:
    """Unconstrained real-valued index from one featurizer+regressor pair."""
    featurizer = component.featurizer
    if isinstance(featurizer, TfidfModel):
        vec = transform_tfidf(featurizer, doc)
    elif isinstance(featurizer, PpmiModel):
        vec = transform_ppmi(featurizer, doc)
    elif isinstance(featurizer, EmbeddingSet):
        if not isinstance(doc, Document):
            raise ValueError("embedding featurizers need a Document with an id")
        if doc.id not in featurizer.vectors:
            raise ValueError(f"no embedding for document id {doc.id!r}")
        vec = featurizer.vectors[doc.id]
    else:
        raise TypeError(f"unsupported featurizer type {type(featurizer).__name__}")
    return float(predict(component.regressor, vec.reshape(1, -1))[0])


def snap_to_paragraph(raw: float, starts: Sequence[int]) -> int:
    """Member of starts closest to raw; equidistant picks the smaller start."""
    if len(starts) == 0:
        raise ValueError("starts must be non-empty")
    if any(b <= a for a, b in zip(starts, starts[1:])):
        raise ValueError("starts must be strictly increasing")
    best = starts[0]
    for start in starts[1:]:
        if abs(start - raw) < abs(best - raw):
            best = start
    return int(best)


def round_half_away(value: float) -> int:
    """Nearest integer, halves away from zero: 47.5 -> 48, -0.5 -> -1."""
    if value >= 0:
        return int(math.floor(value + 0.5))
    return -int(math.floor(-value + 0.5))


def clip_round(raw: float, word_count: int) -> int:
    """Round half away from zero, then clamp into [0, word_count]."""
    if word_count < 0:
        raise ValueError("word_count must be nonnegative")
    return min(max(round_half_away(raw), 0), word_count)


def _postprocess(raw: float, text: str, snap: bool, clip: bool) -> Union[int, float]:
    value: Union[int, float] = raw
    if snap:
        value = snap_to_paragraph(value, paragraph_starts(text))
    if clip:
        value = clip_round(value, len(tokenize_words(text)))
    return value


def component_predictions(
    component: BoundaryComponent, corpus: Corpus, snap: bool = True, clip: bool = True
) -> PredictionSet:
    values = {
        doc.id: _postprocess(predict_raw(component, doc), doc.text, snap, clip)
        for doc in corpus
    }
    return PredictionSet(name=component.name, kind="scalar", values=values)


def run_pipeline(pipeline: BoundaryPipeline, corpus: Corpus) -> PredictionSet:
    """Post-process each component, combine by weighted average, then round
    (and clamp, when clipping is on) the combined value to the final index."""
    component_sets = [
        component_predictions(comp, corpus, pipeline.snap, pipeline.clip)
        for comp in pipeline.components
    ]
    combined = average_predictions(component_sets, pipeline.ensemble.weights)
    final = {}
    for doc in corpus:
        value = combined.values[doc.id]
        if pipeline.clip:
            final[doc.id] = clip_round(value, len(tokenize_words(doc.text)))
        else:
            final[doc.id] = round_half_away(value)
    return PredictionSet(name="ensemble", kind="scalar", values=final)


def evaluate_boundary(preds, gold: Corpus) -> float:
    """Mean absolute error between predicted and gold word indices."""
    return mean_absolute_error(preds, gold)


def _boundary_targets(corpus: Corpus) -> np.ndarray:
    targets = []
    for doc in corpus:
        if doc.label is None:
            raise ValueError(f"document {doc.id!r} has no gold label")
        targets.append(float(doc.label))
    return np.asarray(targets)


def fit_boundary_component(
    name: str, train: Corpus, features_spec: dict, regressor_spec: dict
) -> BoundaryComponent:
    """Fit one featurizer+regressor pair from plain-dict specs, e.g.
    {"kind": "tfidf", "min_df": 2} with {"kind": "ols", "ridge_eps": 1e-6}."""
    features_kind = features_spec.get("kind")
    if features_kind == "tfidf":
        config = TfidfConfig(
            min_df=features_spec.get("min_df", TfidfConfig.min_df),
            max_features=features_spec.get("max_features", TfidfConfig.max_features),
            l2_normalize=features_spec.get("l2_normalize", TfidfConfig.l2_normalize),
        )
        featurizer: Featurizer = fit_tfidf(train, config)
    elif features_kind == "ppmi":
        featurizer = fit_ppmi(train)
    elif features_kind == "embeddings":
        featurizer = load_embeddings(features_spec["path"])
    else:
        raise ValueError(f"unknown featurizer kind {features_kind!r}")

    X = featurize(train, featurizer)
    y = _boundary_targets(train)
    params = {k: v for k, v in regressor_spec.items() if k != "kind"}
    regressor_kind = regressor_spec.get("kind")
    if regressor_kind == "ols":
        params.setdefault("ridge_eps", PIPELINE_RIDGE_EPS)
        regressor = fit_ols(X, y, **params)
    elif regressor_kind == "elasticnet":
        regressor = fit_elasticnet(X, y, ElasticNetConfig(**params))
    else:
        raise ValueError(f"unknown regressor kind {regressor_kind!r}")
    return BoundaryComponent(name=name, featurizer=featurizer, regressor=regressor)


def build_pipeline(
    components: Sequence[BoundaryComponent],
    dev: Corpus,
    snap: bool = True,
    clip: bool = True,
    weights: Optional[Sequence[float]] = None,
) -> BoundaryPipeline:
    """Assemble a pipeline whose ensemble weights come from dev-split MAEs
    (reciprocal, normalized); pass weights explicitly to skip the dev pass."""
    if weights is None:
        maes = [
            evaluate_boundary(component_predictions(comp, dev, snap, clip), dev)
            for comp in components
        ]
        weights = inverse_mae_weights(maes)
    spec = EnsembleSpec(
        components=tuple(c.name for c in components),
        weights=tuple(float(w) for w in weights),
        rule="weighted_average",
    )
    return BoundaryPipeline(
        components=tuple(components), ensemble=spec, snap=snap, clip=clip
    )
