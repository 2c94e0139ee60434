"""Linear models fitted on feature matrices.

Two regressors drive boundary prediction: ordinary least squares solved by
normal equations, and ElasticNet solved by cyclic coordinate descent with
soft-thresholding. A small softmax classifier rounds out the module so
classification ensembles can run against a native component.

Both regressors standardize columns internally (mean 0, variance 1, constant
columns left at scale 1) and fold the fitted coefficients back to raw feature
space, so `weights` and `intercept` always apply to untransformed features.
The standardization statistics are kept on the model for persistence.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .features import FeatureMatrix

__all__ = [
    "RegressorModel",
    "ElasticNetConfig",
    "ClassifierModel",
    "fit_ols",
    "fit_elasticnet",
    "predict",
    "fit_softmax",
    "predict_proba",
    "predict_classes",
    "softmax_loss_and_grad",
    "save_model",
    "load_model",
]


@dataclass(frozen=True)
class RegressorModel:
    """Fitted linear regressor in raw feature space: prediction = Xw + b."""

    kind: str
    weights: np.ndarray
    intercept: float
    feature_means: np.ndarray
    feature_scales: np.ndarray
    config: dict
    fit_meta: dict

    def __post_init__(self) -> None:
        if self.kind not in ("ols", "elasticnet"):
            raise ValueError(f"unknown regressor kind {self.kind!r}")
        if not (np.isfinite(self.weights).all() and math.isfinite(self.intercept)):
            raise ValueError("regressor has non-finite parameters")


@dataclass(frozen=True)
class ElasticNetConfig:
    lambda1: float = 1.0
    lambda2: float = 1.0
    max_iter: int = 1000
    tol: float = 1e-6
    fit_intercept: bool = True
    standardize: bool = True

    def __post_init__(self) -> None:
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("regularization strengths must be nonnegative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class ClassifierModel:
    """Softmax classifier: logits = X @ weights.T + biases."""

    weights: np.ndarray
    biases: np.ndarray
    config: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.weights.ndim != 2 or self.weights.shape[0] < 2:
            raise ValueError("classifier needs a (classes >= 2) x features matrix")
        if self.biases.shape != (self.weights.shape[0],):
            raise ValueError("biases length must equal class count")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.biases).all()):
            raise ValueError("classifier has non-finite parameters")

    @property
    def n_classes(self) -> int:
        return int(self.weights.shape[0])


def _as_matrix(X: Union[FeatureMatrix, np.ndarray]) -> np.ndarray:
    values = X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=float)
    if values.ndim != 2:
        raise ValueError("X must be 2-dimensional")
    if not np.isfinite(values).all():
        raise ValueError("X contains non-finite values")
    return values


def _as_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    values = _as_matrix(X)
    target = np.asarray(y, dtype=float)
    if target.ndim != 1:
        raise ValueError("y must be 1-dimensional")
    if not np.isfinite(target).all():
        raise ValueError("y contains non-finite values")
    if values.shape[0] != target.shape[0]:
        raise ValueError("X and y disagree on sample count")
    if values.shape[0] < 1:
        raise ValueError("need at least one sample")
    return values, target


def _standardize(
    values: np.ndarray, fit_intercept: bool, standardize: bool
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n_features = values.shape[1]
    means = values.mean(axis=0) if fit_intercept else np.zeros(n_features)
    work = values - means
    if standardize:
        scales = values.std(axis=0)
        scales[scales == 0.0] = 1.0
        work = work / scales
    else:
        scales = np.ones(n_features)
    return work, means, scales


def _fold_back(
    w_work: np.ndarray,
    b_work: float,
    means: np.ndarray,
    scales: np.ndarray,
    fit_intercept: bool,
) -> tuple[np.ndarray, float]:
    weights = w_work / scales
    intercept = b_work - float(weights @ means) if fit_intercept else 0.0
    return weights, intercept


def fit_ols(
    X,
    y,
    ridge_eps: float = 0.0,
    fit_intercept: bool = True,
    standardize: bool = True,
) -> RegressorModel:
    """Least squares ||y - Xw - b||^2 by normal equations on the
    intercept-augmented standardized system. ridge_eps > 0 adds that amount
    to the Gram diagonal (intercept entry excluded) to stabilize
    rank-deficient systems; with ridge_eps = 0 an exactly singular system is
    rejected."""
    if ridge_eps < 0:
        raise ValueError("ridge_eps must be nonnegative")
    values, target = _as_xy(X, y)
    work, means, scales = _standardize(values, fit_intercept, standardize)
    if fit_intercept:
        design = np.hstack([np.ones((work.shape[0], 1)), work])
    else:
        design = work
    gram = design.T @ design
    rhs = design.T @ target
    if ridge_eps > 0:
        start = 1 if fit_intercept else 0
        gram = gram + np.diag(
            np.r_[np.zeros(start), np.full(gram.shape[0] - start, ridge_eps)]
        )
    elif np.linalg.matrix_rank(gram, hermitian=True) < gram.shape[0]:
        raise ValueError(
            "normal equations are singular; pass ridge_eps > 0 to stabilize"
        )
    theta = np.linalg.solve(gram, rhs)
    if fit_intercept:
        b_work, w_work = float(theta[0]), theta[1:]
    else:
        b_work, w_work = 0.0, theta
    weights, intercept = _fold_back(w_work, b_work, means, scales, fit_intercept)
    residual = target - values @ weights - intercept
    return RegressorModel(
        kind="ols",
        weights=weights,
        intercept=intercept,
        feature_means=means,
        feature_scales=scales,
        config={
            "ridge_eps": ridge_eps,
            "fit_intercept": fit_intercept,
            "standardize": standardize,
        },
        fit_meta={"iterations": 1, "final_objective": float(residual @ residual)},
    )


def _soft_threshold(rho: float, lam: float) -> float:
    if rho > lam:
        return rho - lam
    if rho < -lam:
        return rho + lam
    return 0.0


def fit_elasticnet(X, y, config: Optional[ElasticNetConfig] = None) -> RegressorModel:
    """Minimize F(w,b) = 1/2 ||y - Xw - b||^2 + lambda1 ||w||_1
    + lambda2/2 ||w||_2^2 by cyclic coordinate descent. Each sweep updates
    every coordinate by soft-thresholding, then moves the intercept by the
    mean residual; F is recorded per sweep and never increases. Stops when
    the largest coefficient change in a sweep drops below tol."""
    if config is None:
        config = ElasticNetConfig()
    values, target = _as_xy(X, y)
    work, means, scales = _standardize(values, config.fit_intercept, config.standardize)
    n_features = work.shape[1]
    w = np.zeros(n_features)
    b = 0.0
    residual = target.astype(float).copy()
    col_sq = (work**2).sum(axis=0)
    objective_path: list[float] = []
    converged = False
    for _ in range(config.max_iter):
        max_delta = 0.0
        for j in range(n_features):
            rho = float(work[:, j] @ residual) + col_sq[j] * w[j]
            denom = col_sq[j] + config.lambda2
            w_new = 0.0 if denom == 0.0 else _soft_threshold(rho, config.lambda1) / denom
            if w_new != w[j]:
                residual += work[:, j] * (w[j] - w_new)
                max_delta = max(max_delta, abs(w_new - w[j]))
                w[j] = w_new
        if config.fit_intercept:
            shift = float(residual.mean())
            b += shift
            residual -= shift
        objective_path.append(
            0.5 * float(residual @ residual)
            + config.lambda1 * float(np.abs(w).sum())
            + 0.5 * config.lambda2 * float(w @ w)
        )
        if max_delta < config.tol:
            converged = True
            break
    weights, intercept = _fold_back(w, b, means, scales, config.fit_intercept)
    return RegressorModel(
        kind="elasticnet",
        weights=weights,
        intercept=intercept,
        feature_means=means,
        feature_scales=scales,
        config={
            "lambda1": config.lambda1,
            "lambda2": config.lambda2,
            "max_iter": config.max_iter,
            "tol": config.tol,
            "fit_intercept": config.fit_intercept,
            "standardize": config.standardize,
        },
        fit_meta={
            "iterations": len(objective_path),
            "final_objective": objective_path[-1],
            "objective_path": objective_path,
            "converged": converged,
        },
    )


def predict(model: RegressorModel, X) -> np.ndarray:
    values = _as_matrix(X)
    if values.shape[1] != model.weights.shape[0]:
        raise ValueError(
            f"feature dimension mismatch: model has {model.weights.shape[0]}, "
            f"got {values.shape[1]}"
        )
    return values @ model.weights + model.intercept


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


def softmax_loss_and_grad(
    weights: np.ndarray, biases: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus (l2/2)||W||^2 (biases unpenalized), with its
    analytic gradient. Kept separate from fitting so the gradient can be
    checked against finite differences."""
    n = X.shape[0]
    probs = _softmax_rows(X @ weights.T + biases)
    loss = -float(np.log(probs[np.arange(n), y]).mean())
    loss += 0.5 * l2 * float((weights**2).sum())
    delta = probs
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grad_w = delta.T @ X + l2 * weights
    grad_b = delta.sum(axis=0)
    return loss, grad_w, grad_b


def fit_softmax(X, y_classes, lr: float, epochs: int, l2: float = 0.0) -> ClassifierModel:
    """Full-batch gradient descent from zero initialization; the class count
    is one more than the largest label seen."""
    if lr <= 0:
        raise ValueError("lr must be positive")
    if epochs < 0:
        raise ValueError("epochs must be nonnegative")
    if l2 < 0:
        raise ValueError("l2 must be nonnegative")
    values = _as_matrix(X)
    labels = np.asarray(y_classes)
    if labels.ndim != 1 or labels.shape[0] != values.shape[0]:
        raise ValueError("y_classes must be one label per row of X")
    if not np.issubdtype(labels.dtype, np.integer):
        raise ValueError("class labels must be integers")
    if labels.min() < 0:
        raise ValueError("class labels must be nonnegative")
    if np.unique(labels).size < 2:
        raise ValueError("need at least two distinct classes")
    n_classes = int(labels.max()) + 1
    weights = np.zeros((n_classes, values.shape[1]))
    biases = np.zeros(n_classes)
    for _ in range(epochs):
        _, grad_w, grad_b = softmax_loss_and_grad(weights, biases, values, labels, l2)
        weights -= lr * grad_w
        biases -= lr * grad_b
    return ClassifierModel(
        weights=weights,
        biases=biases,
        config={"lr": lr, "epochs": epochs, "l2": l2},
    )


def predict_proba(model: ClassifierModel, X) -> np.ndarray:
    values = _as_matrix(X)
    if values.shape[1] != model.weights.shape[1]:
        raise ValueError(
            f"feature dimension mismatch: model has {model.weights.shape[1]}, "
            f"got {values.shape[1]}"
        )
    return _softmax_rows(values @ model.weights.T + model.biases)


def predict_classes(model: ClassifierModel, X) -> np.ndarray:
    # np.argmax takes the first maximum, which is the smallest class id.
    return predict_proba(model, X).argmax(axis=1)


def _model_to_dict(model: Union[RegressorModel, ClassifierModel]) -> dict:
    if isinstance(model, RegressorModel):
        return {
            "kind": model.kind,
            "weights": model.weights.tolist(),
            "intercept": model.intercept,
            "feature_means": model.feature_means.tolist(),
            "feature_scales": model.feature_scales.tolist(),
            "config": model.config,
            "fit_meta": model.fit_meta,
        }
    if isinstance(model, ClassifierModel):
        return {
            "kind": "softmax",
            "weights": model.weights.tolist(),
            "biases": model.biases.tolist(),
            "config": model.config,
        }
    raise TypeError(f"cannot serialize model type {type(model).__name__}")


def save_model(model: Union[RegressorModel, ClassifierModel], path) -> None:
    """One JSON document per model; floats survive the round-trip exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path) -> Union[RegressorModel, ClassifierModel]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    kind = data.get("kind")
    if kind in ("ols", "elasticnet"):
        return RegressorModel(
            kind=kind,
            weights=np.asarray(data["weights"], dtype=float),
            intercept=float(data["intercept"]),
            feature_means=np.asarray(data["feature_means"], dtype=float),
            feature_scales=np.asarray(data["feature_scales"], dtype=float),
            config=data["config"],
            fit_meta=data["fit_meta"],
        )
    if kind == "softmax":
        return ClassifierModel(
            weights=np.asarray(data["weights"], dtype=float),
            biases=np.asarray(data["biases"], dtype=float),
            config=data.get("config", {}),
        )
    raise ValueError(f"unknown model kind {kind!r}")
