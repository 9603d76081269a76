"""Random forest: bagged CART trees, each on a sqrt(d) feature subset.

Per-tree randomness comes from seeds spawned off the training seed, so the
forest is reproducible tree by tree. Probabilities are the fraction of
trees voting for each class.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .base import Model, check_training_inputs
from .tree import grow_tree, tree_leaf_dist


class RandomForestModel(Model):
    algorithm = "random_forest"

    def fit(self, X: np.ndarray, y: Sequence[str]) -> "RandomForestModel":
        X, self.classes_, y_idx = check_training_inputs(X, y)
        self.n_features_ = X.shape[1]
        n, d = X.shape
        m = max(1, int(round(math.sqrt(d))))
        self.trees_: list[dict] = []
        for t in range(self.cfg.rf_trees):
            rng = np.random.default_rng(np.random.SeedSequence([self.cfg.seed, t]))
            rows = rng.integers(0, n, size=n)
            feats = np.sort(rng.choice(d, size=m, replace=False))
            root = grow_tree(X[rows][:, feats], y_idx[rows], len(self.classes_),
                             self.cfg.rf_max_depth, 1)
            self.trees_.append({"features": feats.tolist(), "root": root})
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = self._check_ready(X)
        votes = np.zeros((len(X), len(self.classes_)))
        for tree in self.trees_:
            cols = tree["features"]
            for i, x in enumerate(X):
                dist = tree_leaf_dist(tree["root"], x[cols])
                votes[i, int(np.argmax(dist))] += 1.0
        return votes / len(self.trees_)

    def params_dict(self) -> dict:
        return {"trees": self.trees_}

    def load_params(self, params: dict) -> None:
        self.trees_ = params["trees"]
