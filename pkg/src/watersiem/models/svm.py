"""Linear one-vs-rest SVM trained by batch subgradient descent on the hinge loss.

Probability output is a deliberate degenerate one-hot at the predicted
class; the probabilistic alerting trials are meant for the tree and
neighbour models whose vote fractions are real distributions.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .base import Model, check_training_inputs


class LinearSVMModel(Model):
    algorithm = "svm"

    def fit(self, X: np.ndarray, y: Sequence[str]) -> "LinearSVMModel":
        X, self.classes_, y_idx = check_training_inputs(X, y)
        self.n_features_ = X.shape[1]
        n_classes = len(self.classes_)
        self.W_ = np.zeros((n_classes, X.shape[1]))
        self.b_ = np.zeros(n_classes)
        for c in range(n_classes):
            sign = np.where(y_idx == c, 1.0, -1.0)
            w = np.zeros(X.shape[1])
            b = 0.0
            for epoch in range(self.cfg.svm_epochs):
                lr = self.cfg.svm_learning_rate / (1.0 + 0.01 * epoch)
                margins = sign * (X @ w + b)
                violating = margins < 1.0
                # d/dw [ 0.5 ||w||^2 + C * mean(hinge) ]
                grad_w = w - self.cfg.svm_c * (sign[violating, None] * X[violating]).sum(axis=0) / len(X)
                grad_b = -self.cfg.svm_c * sign[violating].sum() / len(X)
                w -= lr * grad_w
                b -= lr * grad_b
            self.W_[c] = w
            self.b_[c] = b
        return self

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return X @ self.W_.T + self.b_

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = self._check_ready(X)
        scores = self.decision_function(X)
        out = np.zeros_like(scores)
        out[np.arange(len(X)), np.argmax(scores, axis=1)] = 1.0
        return out

    def params_dict(self) -> dict:
        return {"W": self.W_.tolist(), "b": self.b_.tolist()}

    def load_params(self, params: dict) -> None:
        self.W_ = np.array(params["W"], dtype=float)
        self.b_ = np.array(params["b"], dtype=float)
