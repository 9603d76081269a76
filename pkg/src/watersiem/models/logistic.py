"""Multinomial logistic regression trained with batch gradient descent."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .base import Model, check_training_inputs


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def add_bias(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((len(X), 1))])


def cross_entropy_loss(W: np.ndarray, Xb: np.ndarray, Y: np.ndarray) -> float:
    """Mean negative log-likelihood; ``Y`` is one-hot, ``Xb`` carries the bias column."""
    p = softmax(Xb @ W)
    return float(-np.mean(np.sum(Y * np.log(np.clip(p, 1e-300, None)), axis=1)))


def cross_entropy_grad(W: np.ndarray, Xb: np.ndarray, Y: np.ndarray) -> np.ndarray:
    p = softmax(Xb @ W)
    return Xb.T @ (p - Y) / len(Xb)


class LogisticRegressionModel(Model):
    algorithm = "logistic_regression"

    def fit(self, X: np.ndarray, y: Sequence[str]) -> "LogisticRegressionModel":
        X, self.classes_, y_idx = check_training_inputs(X, y)
        self.n_features_ = X.shape[1]
        Xb = add_bias(X)
        n_classes = len(self.classes_)
        Y = np.eye(n_classes)[y_idx]
        W = np.zeros((Xb.shape[1], n_classes))
        for _ in range(self.cfg.lr_epochs):
            W -= self.cfg.lr_learning_rate * cross_entropy_grad(W, Xb, Y)
        self.W_ = W
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = self._check_ready(X)
        return softmax(add_bias(X) @ self.W_)

    def params_dict(self) -> dict:
        return {"W": self.W_.tolist()}

    def load_params(self, params: dict) -> None:
        self.W_ = np.array(params["W"], dtype=float)
