"""Shared classifier interface: fit / predict / predict_proba plus JSON round-trip.

Class order is fixed at fit time (sorted label strings) and every
probability row is a distribution over that order. ``predict`` is always
the argmax of ``predict_proba`` with ties going to the lowest class index.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np

from ..config import TrainConfig
from ..errors import TrainingError


def check_training_inputs(X: np.ndarray, y: Sequence[str]) -> tuple[np.ndarray, list[str], np.ndarray]:
    """Validate and encode labels; returns (X, class list, integer labels)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise TrainingError(f"feature matrix must be 2-D and non-empty, got shape {X.shape}")
    if len(X) != len(y):
        raise TrainingError(f"{len(X)} feature rows vs {len(y)} labels")
    if not np.isfinite(X).all():
        raise TrainingError("features contain NaN or infinite values")
    classes = sorted(set(y))
    if len(classes) < 2:
        raise TrainingError(f"need at least 2 classes, got {classes}")
    index = {c: i for i, c in enumerate(classes)}
    return X, classes, np.array([index[label] for label in y], dtype=int)


class Model(ABC):
    """A trained classifier over a fixed class order."""

    algorithm: str = ""

    def __init__(self, cfg: TrainConfig | None = None):
        self.cfg = cfg or TrainConfig()
        self.classes_: list[str] = []

    @abstractmethod
    def fit(self, X: np.ndarray, y: Sequence[str]) -> "Model":
        ...

    @abstractmethod
    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        ...

    def predict(self, X: np.ndarray) -> list[str]:
        proba = self.predict_proba(X)
        return [self.classes_[i] for i in np.argmax(proba, axis=1)]

    def _check_ready(self, X: np.ndarray) -> np.ndarray:
        if not self.classes_:
            raise TrainingError(f"{self.algorithm} model is not fitted")
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        expected = getattr(self, "n_features_", None)
        if expected is not None and X.shape[1] != expected:
            raise TrainingError(f"expected {expected} features, got {X.shape[1]}")
        return X

    # serialization ---------------------------------------------------------

    def config_dict(self) -> dict:
        return {
            "knn_k": self.cfg.knn_k, "rf_trees": self.cfg.rf_trees,
            "rf_max_depth": self.cfg.rf_max_depth, "dt_max_depth": self.cfg.dt_max_depth,
            "dt_min_leaf": self.cfg.dt_min_leaf, "lr_learning_rate": self.cfg.lr_learning_rate,
            "lr_epochs": self.cfg.lr_epochs, "svm_c": self.cfg.svm_c,
            "svm_epochs": self.cfg.svm_epochs, "svm_learning_rate": self.cfg.svm_learning_rate,
            "seed": self.cfg.seed,
        }

    @abstractmethod
    def params_dict(self) -> dict:
        ...

    @abstractmethod
    def load_params(self, params: dict) -> None:
        ...

    def to_json(self, scaler_id: str = "") -> dict:
        return {
            "algorithm": self.algorithm,
            "classes": list(self.classes_),
            "n_features": getattr(self, "n_features_", None),
            "config": self.config_dict(),
            "scaler_id": scaler_id,
            "params": self.params_dict(),
        }
