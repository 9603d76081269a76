"""Six classical classifiers behind one train/predict/predict-probability interface."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from ..config import TrainConfig
from ..errors import TrainingError
from .base import Model
from .forest import RandomForestModel
from .knn import KNNModel
from .logistic import LogisticRegressionModel
from .naive_bayes import GaussianNBModel
from .svm import LinearSVMModel
from .tree import DecisionTreeModel

ALGORITHMS: dict[str, type[Model]] = {
    LogisticRegressionModel.algorithm: LogisticRegressionModel,
    GaussianNBModel.algorithm: GaussianNBModel,
    KNNModel.algorithm: KNNModel,
    LinearSVMModel.algorithm: LinearSVMModel,
    DecisionTreeModel.algorithm: DecisionTreeModel,
    RandomForestModel.algorithm: RandomForestModel,
}


def train(algorithm: str, X: np.ndarray, y: Sequence[str],
          cfg: TrainConfig | None = None) -> Model:
    if algorithm not in ALGORITHMS:
        raise TrainingError(f"unknown algorithm {algorithm!r}; expected one of {sorted(ALGORITHMS)}")
    return ALGORITHMS[algorithm](cfg).fit(X, y)


def model_to_json(model: Model, scaler_id: str = "") -> str:
    return json.dumps(model.to_json(scaler_id), sort_keys=True)


def model_from_json(text: str) -> Model:
    doc = json.loads(text)
    cls = ALGORITHMS.get(doc.get("algorithm", ""))
    if cls is None:
        raise TrainingError(f"unknown algorithm in model document: {doc.get('algorithm')!r}")
    cfg = TrainConfig(**doc["config"])
    model = cls(cfg)
    model.classes_ = list(doc["classes"])
    if doc.get("n_features") is not None:
        model.n_features_ = doc["n_features"]
    model.load_params(doc["params"])
    return model


def save_model(model: Model, path: str | Path, scaler_id: str = "") -> Path:
    path = Path(path)
    path.write_text(model_to_json(model, scaler_id))
    return path


def load_model(path: str | Path) -> Model:
    return model_from_json(Path(path).read_text())


__all__ = [
    "ALGORITHMS", "Model", "train", "save_model", "load_model",
    "model_to_json", "model_from_json",
    "LogisticRegressionModel", "GaussianNBModel", "KNNModel",
    "LinearSVMModel", "DecisionTreeModel", "RandomForestModel",
]
