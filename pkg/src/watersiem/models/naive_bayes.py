"""Gaussian naive Bayes with a variance floor for constant features."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .base import Model, check_training_inputs

VARIANCE_FLOOR = 1e-9


class GaussianNBModel(Model):
    algorithm = "naive_bayes"

    def fit(self, X: np.ndarray, y: Sequence[str]) -> "GaussianNBModel":
        X, self.classes_, y_idx = check_training_inputs(X, y)
        self.n_features_ = X.shape[1]
        n_classes = len(self.classes_)
        self.mean_ = np.zeros((n_classes, X.shape[1]))
        self.var_ = np.zeros((n_classes, X.shape[1]))
        self.log_prior_ = np.zeros(n_classes)
        for c in range(n_classes):
            rows = X[y_idx == c]
            self.mean_[c] = rows.mean(axis=0)
            self.var_[c] = np.maximum(rows.var(axis=0), VARIANCE_FLOOR)
            self.log_prior_[c] = math.log(len(rows) / len(X))
        return self

    def _joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        # log N(x; mu, var) summed over features, one column per class
        out = np.empty((len(X), len(self.classes_)))
        for c in range(len(self.classes_)):
            diff = X - self.mean_[c]
            out[:, c] = self.log_prior_[c] - 0.5 * np.sum(
                np.log(2.0 * np.pi * self.var_[c]) + diff * diff / self.var_[c], axis=1)
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = self._check_ready(X)
        jll = self._joint_log_likelihood(X)
        shifted = jll - jll.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=1, keepdims=True)

    def params_dict(self) -> dict:
        return {"mean": self.mean_.tolist(), "var": self.var_.tolist(),
                "log_prior": self.log_prior_.tolist()}

    def load_params(self, params: dict) -> None:
        self.mean_ = np.array(params["mean"], dtype=float)
        self.var_ = np.array(params["var"], dtype=float)
        self.log_prior_ = np.array(params["log_prior"], dtype=float)
