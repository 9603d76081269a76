"""CART decision tree: Gini impurity, deterministic split tie-breaking.

Ties break toward the lowest feature index and then the lowest threshold,
so identical data always grows the identical tree. Grown to purity by
default; leaves store the class distribution of their training rows.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .base import Model, check_training_inputs


def find_best_split(X: np.ndarray, y_idx: np.ndarray, n_classes: int,
                    min_leaf: int = 1) -> tuple[int, float] | None:
    """The (feature, threshold) minimizing weighted Gini, or None if unsplittable."""
    n = len(y_idx)
    best_cost = np.inf
    best: tuple[int, float] | None = None
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        values = X[order, f]
        labels = y_idx[order]
        # prefix class counts after each row; cut i keeps rows 0..i on the left
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), labels] = 1.0
        prefix = np.cumsum(onehot, axis=0)
        total = prefix[-1]
        cut = np.nonzero(values[:-1] < values[1:])[0]
        if min_leaf > 1:
            cut = cut[(cut + 1 >= min_leaf) & (n - cut - 1 >= min_leaf)]
        if len(cut) == 0:
            continue
        n_left = cut + 1.0
        n_right = n - n_left
        left_sq = np.sum(prefix[cut] ** 2, axis=1)
        right_sq = np.sum((total - prefix[cut]) ** 2, axis=1)
        # weighted Gini = 1 - (|L|*purity_L + |R|*purity_R)/n
        cost = 1.0 - (left_sq / n_left + right_sq / n_right) / n
        i = int(np.argmin(cost))  # first minimum -> lowest threshold
        if cost[i] < best_cost:
            best_cost = cost[i]
            threshold = (values[cut[i]] + values[cut[i] + 1]) / 2.0
            best = (f, float(threshold))
    return best


def grow_tree(X: np.ndarray, y_idx: np.ndarray, n_classes: int,
              max_depth: int | None = None, min_leaf: int = 1, depth: int = 0) -> dict:
    """Recursive CART builder returning a JSON-friendly node structure."""
    counts = np.bincount(y_idx, minlength=n_classes)
    dist = counts / len(y_idx)
    if (counts > 0).sum() <= 1 or (max_depth is not None and depth >= max_depth) \
            or len(y_idx) < 2 * min_leaf:
        return {"leaf": dist.tolist()}
    split = find_best_split(X, y_idx, n_classes, min_leaf)
    if split is None:
        return {"leaf": dist.tolist()}
    f, threshold = split
    mask = X[:, f] <= threshold
    return {
        "feature": f,
        "threshold": threshold,
        "left": grow_tree(X[mask], y_idx[mask], n_classes, max_depth, min_leaf, depth + 1),
        "right": grow_tree(X[~mask], y_idx[~mask], n_classes, max_depth, min_leaf, depth + 1),
    }


def tree_leaf_dist(node: dict, x: np.ndarray) -> list[float]:
    while "leaf" not in node:
        node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
    return node["leaf"]


class DecisionTreeModel(Model):
    algorithm = "decision_tree"

    def fit(self, X: np.ndarray, y: Sequence[str]) -> "DecisionTreeModel":
        X, self.classes_, y_idx = check_training_inputs(X, y)
        self.n_features_ = X.shape[1]
        self.root_ = grow_tree(X, y_idx, len(self.classes_),
                               self.cfg.dt_max_depth, self.cfg.dt_min_leaf)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = self._check_ready(X)
        return np.array([tree_leaf_dist(self.root_, x) for x in X])

    def params_dict(self) -> dict:
        return {"root": self.root_}

    def load_params(self, params: dict) -> None:
        self.root_ = params["root"]
