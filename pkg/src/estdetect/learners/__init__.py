"""The five classifiers: linear SVM, decision tree, random forest, kNN, logistic regression.

Every trained model exposes a real-valued :func:`decision_score` that grows
with class-1 (deceptive) confidence, and :func:`predict` thresholds it.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Any

import numpy as np
from scipy.special import expit

from ..errors import DimensionMismatch, SingleClassTraining
from .knn import knn_score
from .linear import LinearFit, fit_linear_svm, fit_logistic, linear_score, logistic_objective
from .tree import Tree, build_forest, build_tree, resolve_max_features

KINDS = ("linear_svm", "decision_tree", "random_forest", "knn", "logistic_regression")
SHORT_NAMES = {
    "linear_svm": "L-SVM",
    "decision_tree": "DT",
    "random_forest": "RF",
    "knn": "kNN",
    "logistic_regression": "LR",
}
_ALIASES = {"svm": "linear_svm", "l-svm": "linear_svm", "lsvm": "linear_svm",
            "dt": "decision_tree", "rf": "random_forest", "lr": "logistic_regression"}
MODEL_FORMAT_VERSION = 1


def canonical_kind(name: str) -> str:
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    if key not in KINDS:
        raise ValueError(f"unknown classifier {name!r}; choose from {', '.join(KINDS)}")
    return key


@dataclass(frozen=True)
class LearnerSpec:
    kind: str
    C: float = 1.0
    k_neighbors: int = 3
    max_depth: int = 10
    n_estimators: int = 100
    max_features: Any = "sqrt"
    bootstrap: bool = True
    tol: float = 1e-6
    max_iter: int = 10_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))

    @property
    def hyperparameters(self) -> dict:
        d = asdict(self)
        d.pop("kind")
        d.pop("seed")
        return d

    def with_seed(self, seed: int) -> "LearnerSpec":
        return replace(self, seed=int(seed))


@dataclass(frozen=True)
class TrainedModel:
    spec: LearnerSpec
    n_features: int
    parameters: dict = field(repr=False)

    @property
    def threshold(self) -> float:
        return 0.0 if self.spec.kind == "linear_svm" else 0.5

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": self.spec.kind,
            "hyperparameters": self.spec.hyperparameters,
            "seed": self.spec.seed,
            "n_features": self.n_features,
            "parameters": _params_to_json(self.spec.kind, self.parameters),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainedModel":
        if doc.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format {doc.get('format_version')!r}")
        spec = LearnerSpec(doc["kind"], seed=doc["seed"], **doc["hyperparameters"])
        return cls(spec, int(doc["n_features"]), _params_from_json(spec.kind, doc["parameters"]))

    @classmethod
    def from_json(cls, text: str) -> "TrainedModel":
        return cls.from_dict(json.loads(text))


def _params_to_json(kind: str, p: dict) -> dict:
    if kind in ("linear_svm", "logistic_regression"):
        return {"weights": p["weights"].tolist(), "bias": p["bias"]}
    if kind == "decision_tree":
        return {"tree": p["tree"].to_dict()}
    if kind == "random_forest":
        return {"trees": [t.to_dict() for t in p["trees"]]}
    return {"X": p["X"].tolist(), "y": p["y"].tolist()}


def _params_from_json(kind: str, p: dict) -> dict:
    if kind in ("linear_svm", "logistic_regression"):
        return {"weights": np.array(p["weights"], dtype=np.float64), "bias": float(p["bias"])}
    if kind == "decision_tree":
        return {"tree": Tree.from_dict(p["tree"])}
    if kind == "random_forest":
        return {"trees": [Tree.from_dict(t) for t in p["trees"]]}
    return {"X": np.array(p["X"], dtype=np.float64), "y": np.array(p["y"], dtype=np.float64)}


def train(spec: LearnerSpec, X, y) -> TrainedModel:
    """Fit ``spec`` on ``X`` (samples x features) and 0/1 labels ``y``."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DimensionMismatch(f"X {X.shape} does not match {y.size} labels")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    if X.shape[0] < 1:
        raise ValueError("no training samples")
    if spec.kind != "knn" and (X.shape[0] < 2 or np.unique(y).size < 2):
        raise SingleClassTraining(f"{spec.kind} needs both classes in the training data")
    d = X.shape[1]

    if spec.kind == "linear_svm":
        fit = fit_linear_svm(X, y, spec.C, spec.tol, spec.max_iter)
        params = {"weights": fit.weights, "bias": fit.bias, "fit": fit}
    elif spec.kind == "logistic_regression":
        fit = fit_logistic(X, y, spec.C, spec.tol, spec.max_iter)
        params = {"weights": fit.weights, "bias": fit.bias, "fit": fit}
    elif spec.kind == "decision_tree":
        params = {"tree": build_tree(X, y, spec.max_depth)}
    elif spec.kind == "random_forest":
        params = {"trees": build_forest(X, y, spec.n_estimators, spec.max_depth,
                                        spec.max_features, spec.bootstrap, spec.seed)}
    else:
        params = {"X": X.copy(), "y": y.astype(np.float64)}
    return TrainedModel(spec, d, params)


def decision_score(model: TrainedModel, X) -> np.ndarray | float:
    """Class-1 confidence for one vector (returns a float) or a matrix of rows.

    Margin ``w.x + b`` for the SVM, ``sigmoid(w.x + b)`` for LR, leaf class-1
    fraction for DT, its mean over trees for RF and the class-1 neighbour
    fraction for kNN.
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if X2.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected {model.n_features} features, got {X2.shape[1]}")
    p, kind = model.parameters, model.spec.kind
    if kind == "linear_svm":
        s = linear_score(p["weights"], p["bias"], X2)
    elif kind == "logistic_regression":
        s = expit(linear_score(p["weights"], p["bias"], X2))
    elif kind == "decision_tree":
        s = p["tree"].score(X2)
    elif kind == "random_forest":
        s = np.mean([t.score(X2) for t in p["trees"]], axis=0)
    else:
        s = knn_score(p["X"], p["y"], X2, model.spec.k_neighbors)
    return float(s[0]) if single else s


def predict(model: TrainedModel, X) -> np.ndarray | int:
    s = decision_score(model, X)
    if np.ndim(s) == 0:
        return int(s > model.threshold)
    return (s > model.threshold).astype(np.int64)


__all__ = [
    "KINDS", "SHORT_NAMES", "LearnerSpec", "TrainedModel", "LinearFit", "Tree",
    "train", "decision_score", "predict", "canonical_kind",
    "fit_linear_svm", "fit_logistic", "logistic_objective", "build_tree", "build_forest",
    "resolve_max_features", "knn_score",
]
