"""The nine classifiers behind a single train/score contract.

``train(spec, data, seed)`` returns a :class:`TrainedModel`; ``score`` and
``score_many`` turn feature vectors into defect probabilities in [0, 1].
Distance- and margin-based kinds (IBk, IB1, VotedPerceptron) see features
min-max scaled with training statistics, clamped to [0, 1]; every other kind
consumes raw features.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import DegenerateData, InvalidParameter, WidthMismatch
from ..matrix import LabeledMatrix
from ..rng import generator
from .bayes import NaiveBayes
from .intervals import VFI, HyperPipes
from .lazy import IBk
from .linear import Logistic, VotedPerceptron
from .trees import C45Tree, RandomForest

__all__ = [
    "KINDS", "ClassifierSpec", "TrainedModel", "LabeledMatrix", "MinMaxScaler",
    "default_roster", "train", "score", "score_many", "spec_from_json",
]


def _positive_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and value >= 1


def _non_negative(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and value >= 0


# kind -> {parameter: (default, validator, description)}
KINDS: dict[str, dict[str, tuple[Any, Any, str]]] = {
    "HyperPipes": {},
    "IB1": {"k": (1, lambda v: v == 1, "IB1 is IBk with k fixed at 1")},
    "IBk": {"k": (3, _positive_int, "k >= 1")},
    "J48": {
        "confidence": (0.25, lambda v: isinstance(v, (int, float)) and 0 < v <= 0.5, "0 < confidence <= 0.5"),
        "min_leaf": (2, _positive_int, "min_leaf >= 1"),
        "pruned": (True, lambda v: isinstance(v, bool), "boolean"),
    },
    "Logistic": {
        "ridge": (1e-8, _non_negative, "ridge >= 0"),
        "max_iter": (200, _positive_int, "max_iter >= 1"),
        "tol": (1e-6, lambda v: _non_negative(v) and v > 0, "tol > 0"),
    },
    "NaiveBayes": {"var_floor": (1e-6, lambda v: _non_negative(v) and v > 0, "var_floor > 0")},
    "RandomForest": {
        "trees": (100, _positive_int, "trees >= 1"),
        "features_per_split": ("sqrt", lambda v: v == "sqrt" or _positive_int(v), "'sqrt' or int >= 1"),
        "min_leaf": (1, _positive_int, "min_leaf >= 1"),
    },
    "VFI": {},
    "VotedPerceptron": {"epochs": (10, _positive_int, "epochs >= 1")},
}

NORMALIZED_KINDS = frozenset({"IBk", "IB1", "VotedPerceptron"})


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    parameters: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InvalidParameter(f"unknown classifier kind {self.kind!r}")
        schema = KINDS[self.kind]
        unknown = set(self.parameters) - set(schema)
        if unknown:
            raise InvalidParameter(f"{self.kind}: unknown parameters {sorted(unknown)}")
        resolved = {}
        for key, (default, valid, rule) in schema.items():
            value = self.parameters.get(key, default)
            if not valid(value):
                raise InvalidParameter(f"{self.kind}.{key}={value!r} violates {rule}")
            resolved[key] = value
        object.__setattr__(self, "parameters", resolved)
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    def __hash__(self) -> int:
        return hash((self.kind, self.name, json.dumps(self.parameters, sort_keys=True)))

    def to_json(self) -> dict:
        return {"kind": self.kind, "name": self.name, "parameters": dict(self.parameters)}


def spec_from_json(doc: dict) -> ClassifierSpec:
    unknown = set(doc) - {"kind", "name", "parameters"}
    if unknown:
        raise InvalidParameter(f"unknown classifier keys {sorted(unknown)}")
    if "kind" not in doc:
        raise InvalidParameter("classifier entry needs a 'kind'")
    return ClassifierSpec(doc["kind"], dict(doc.get("parameters", {})), doc.get("name", ""))


def default_roster() -> list[ClassifierSpec]:
    """The nine classifiers with default parameters, sorted by name."""
    return sorted((ClassifierSpec(kind) for kind in KINDS), key=lambda s: s.name)


@dataclass(frozen=True, eq=False)
class MinMaxScaler:
    low: np.ndarray
    high: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> MinMaxScaler:
        return cls(X.min(axis=0), X.max(axis=0))

    def transform(self, X: np.ndarray) -> np.ndarray:
        span = self.high - self.low
        safe = np.where(span > 0, span, 1.0)
        scaled = np.where(span > 0, (X - self.low) / safe, 0.0)
        return np.clip(scaled, 0.0, 1.0)


class _Constant:
    def __init__(self, value: float):
        self.value = value

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return np.full(X.shape[0], self.value)


def _build(spec: ClassifierSpec):
    p = spec.parameters
    if spec.kind == "RandomForest":
        return RandomForest(p["trees"], p["features_per_split"], p["min_leaf"])
    if spec.kind == "J48":
        return C45Tree(p["min_leaf"], p["confidence"], p["pruned"])
    if spec.kind == "Logistic":
        return Logistic(p["ridge"], p["max_iter"], p["tol"])
    if spec.kind == "NaiveBayes":
        return NaiveBayes(p["var_floor"])
    if spec.kind in ("IBk", "IB1"):
        return IBk(p["k"])
    if spec.kind == "VotedPerceptron":
        return VotedPerceptron(p["epochs"])
    if spec.kind == "HyperPipes":
        return HyperPipes()
    return VFI()


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ClassifierSpec
    width: int
    scaler: MinMaxScaler | None
    estimator: Any

    @property
    def constant(self) -> float | None:
        return self.estimator.value if isinstance(self.estimator, _Constant) else None


def train(spec: ClassifierSpec, data: LabeledMatrix, seed: int) -> TrainedModel:
    """Fit ``spec`` on ``data``. Deterministic in (spec, data, seed).

    Single-class training data yields a constant model (0.0 when every row is
    clean, 1.0 when every row is defective).
    """
    if len(data) == 0:
        raise DegenerateData("cannot train on zero rows")
    X = data.features
    y = data.labels
    n_pos = int(y.sum())
    if n_pos in (0, y.size):
        return TrainedModel(spec, data.width, None, _Constant(1.0 if n_pos else 0.0))
    scaler = None
    if spec.kind in NORMALIZED_KINDS:
        scaler = MinMaxScaler.fit(X)
        X = scaler.transform(X)
    estimator = _build(spec).fit(X, y, generator(seed))
    return TrainedModel(spec, data.width, scaler, estimator)


def score_many(model: TrainedModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.width:
        raise WidthMismatch(f"expected {model.width} features, got shape {X.shape}")
    if model.scaler is not None:
        X = model.scaler.transform(X)
    scores = np.clip(model.estimator.predict_proba(X), 0.0, 1.0)
    return np.nan_to_num(scores, nan=0.5)


def score(model: TrainedModel, instance) -> float:
    row = np.asarray(instance, dtype=float)
    if row.ndim != 1:
        raise WidthMismatch("an instance is a 1-D feature vector")
    return float(score_many(model, row[None, :])[0])
