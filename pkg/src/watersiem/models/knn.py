"""k-nearest neighbours with Euclidean distance and vote-fraction probabilities.

Neighbour order breaks distance ties by training-row index, so predictions
are reproducible and the vectorized search agrees with a naive scan exactly.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .base import Model, check_training_inputs


class KNNModel(Model):
    algorithm = "knn"

    def fit(self, X: np.ndarray, y: Sequence[str]) -> "KNNModel":
        X, self.classes_, y_idx = check_training_inputs(X, y)
        self.n_features_ = X.shape[1]
        self.X_ = X
        self.y_idx_ = y_idx
        return self

    def kneighbors(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Indices and distances of the k nearest training rows for one query."""
        diff = self.X_ - x
        dist = np.sqrt(np.sum(diff * diff, axis=1))
        order = np.lexsort((np.arange(len(dist)), dist))
        k = min(self.cfg.knn_k, len(dist))
        return order[:k], dist[order[:k]]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = self._check_ready(X)
        out = np.zeros((len(X), len(self.classes_)))
        k = min(self.cfg.knn_k, len(self.X_))
        for i, x in enumerate(X):
            idx, _ = self.kneighbors(x)
            votes = np.bincount(self.y_idx_[idx], minlength=len(self.classes_))
            out[i] = votes / k
        return out

    def params_dict(self) -> dict:
        return {"X": self.X_.tolist(), "y_idx": self.y_idx_.tolist()}

    def load_params(self, params: dict) -> None:
        self.X_ = np.array(params["X"], dtype=float)
        self.y_idx_ = np.array(params["y_idx"], dtype=int)
