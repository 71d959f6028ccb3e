"""CART trees and a product-of-posteriors random forest.

Trees split on Gini impurity over raw integer features, consider a random
subset of features at each node, and keep at least ``min_leaf`` samples per
leaf. Leaf posteriors are add-one smoothed so no class ever gets exactly
zero, which matters because the forest multiplies tree posteriors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

N_CLASSES = 5


class InsufficientData(ValueError):
    pass


@dataclass
class DecisionTree:
    feature: list[int]  # -1 marks a leaf
    threshold: list[float]
    left: list[int]
    right: list[int]
    posterior: list[list[float]]  # only meaningful at leaves

    def leaf(self, x) -> int:
        node = 0
        while self.feature[node] >= 0:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return node

    def predict(self, x) -> np.ndarray:
        return np.array(self.posterior[self.leaf(x)])

    def depth(self) -> int:
        def d(node):
            if self.feature[node] < 0:
                return 0
            return 1 + max(d(self.left[node]), d(self.right[node]))

        return d(0)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "posterior": self.posterior,
        }

    @classmethod
    def from_dict(cls, d: dict) -> DecisionTree:
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["posterior"])


def _best_split(X, Y, features, min_leaf):
    n = len(X)
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        left = np.cumsum(Y[order], axis=0)[:-1]
        total = left[-1] + Y[order[-1]]
        right = total - left
        nl = np.arange(1, n)
        nr = n - nl
        ok = (xs[:-1] < xs[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not ok.any():
            continue
        gl = 1.0 - ((left / nl[:, None]) ** 2).sum(axis=1)
        gr = 1.0 - ((right / nr[:, None]) ** 2).sum(axis=1)
        impurity = np.where(ok, (nl * gl + nr * gr) / n, np.inf)
        i = int(np.argmin(impurity))
        if best is None or impurity[i] < best[0]:
            best = (impurity[i], f, (xs[i] + xs[i + 1]) / 2.0)
    return best


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    max_features: int = 3,
    min_leaf: int = 5,
    max_depth: int = 20,
    n_classes: int = N_CLASSES,
    smoothing: float = 1.0,
) -> DecisionTree:
    tree = DecisionTree([], [], [], [], [])
    Y = np.eye(n_classes)[y]

    def add_leaf(idx):
        counts = Y[idx].sum(axis=0) + smoothing
        tree.feature.append(-1)
        tree.threshold.append(0.0)
        tree.left.append(-1)
        tree.right.append(-1)
        tree.posterior.append([float(v) for v in counts / counts.sum()])
        return len(tree.feature) - 1

    def grow(idx, depth):
        counts = Y[idx].sum(axis=0)
        pure = (counts > 0).sum() <= 1
        if pure or depth >= max_depth or len(idx) < 2 * min_leaf:
            return add_leaf(idx)
        parent = 1.0 - ((counts / len(idx)) ** 2).sum()
        features = rng.choice(X.shape[1], size=min(max_features, X.shape[1]), replace=False)
        split = _best_split(X[idx], Y[idx], features, min_leaf)
        if split is None or split[0] >= parent:
            return add_leaf(idx)
        _, f, thr = split
        node = len(tree.feature)
        tree.feature.append(int(f))
        tree.threshold.append(float(thr))
        tree.left.append(-1)
        tree.right.append(-1)
        tree.posterior.append([])
        go_left = X[idx, f] <= thr
        tree.left[node] = grow(idx[go_left], depth + 1)
        tree.right[node] = grow(idx[~go_left], depth + 1)
        return node

    grow(np.arange(len(X)), 0)
    return tree


class RandomForest:
    """Trees vote by multiplying posteriors: P(c|x) is proportional to the product over trees."""

    def __init__(self, trees: list[DecisionTree], n_classes: int = N_CLASSES):
        if not trees:
            raise ValueError("a forest needs at least one tree")
        self.trees = trees
        self.n_classes = n_classes
        self._cache: dict[tuple, np.ndarray] = {}

    def predict(self, x) -> np.ndarray:
        key = tuple(x)
        hit = self._cache.get(key)
        if hit is None:
            logs = np.zeros(self.n_classes)
            with np.errstate(divide="ignore"):
                for t in self.trees:
                    logs += np.log(t.posterior[t.leaf(key)])
            if np.isneginf(logs).all():
                hit = np.full(self.n_classes, 1.0 / self.n_classes)
            else:
                hit = np.exp(logs - logsumexp(logs))
            self._cache[key] = hit
        return hit.copy()

    def classify(self, x) -> int:
        return int(np.argmax(self.predict(x)))

    def to_json(self) -> str:
        return json.dumps(
            {"format": "forest", "version": 1, "n_classes": self.n_classes,
             "trees": [t.to_dict() for t in self.trees]}
        )

    @classmethod
    def from_json(cls, text: str) -> RandomForest:
        d = json.loads(text)
        if d.get("format") != "forest" or d.get("version") != 1:
            raise ValueError("not a forest checkpoint")
        return cls([DecisionTree.from_dict(t) for t in d["trees"]], d["n_classes"])

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> RandomForest:
        return cls.from_json(Path(path).read_text())


def forest_predict(forest: RandomForest, evidence) -> np.ndarray:
    return forest.predict(evidence)


def _as_arrays(dataset):
    X = np.array([row for row, _ in dataset], dtype=float)
    y = np.array([label for _, label in dataset], dtype=int)
    return X, y


def train_forest(
    dataset,
    rng: np.random.Generator,
    n_trees: int = 100,
    max_features: int = 3,
    min_leaf: int = 5,
    max_depth: int = 20,
) -> RandomForest:
    """Bootstrap-sampled CART trees; ``dataset`` is a list of (features, label)."""
    dataset = list(dataset)
    if not dataset:
        raise InsufficientData("empty dataset")
    X, y = _as_arrays(dataset)
    if len(np.unique(y)) < 2:
        raise InsufficientData("need at least two classes")
    trees = []
    for _ in range(n_trees):
        sample = rng.integers(0, len(X), size=len(X))
        trees.append(grow_tree(X[sample], y[sample], rng, max_features, min_leaf, max_depth))
    return RandomForest(trees)


def cross_validate(dataset, rng: np.random.Generator, folds: int = 10, **kwargs) -> list[float]:
    """Per-fold accuracy of :func:`train_forest` under k-fold cross-validation."""
    dataset = list(dataset)
    order = rng.permutation(len(dataset))
    scores = []
    for k in range(folds):
        test_idx = set(order[k::folds].tolist())
        train = [dataset[i] for i in range(len(dataset)) if i not in test_idx]
        test = [dataset[i] for i in sorted(test_idx)]
        forest = train_forest(train, rng, **kwargs)
        hits = sum(forest.classify(x) == label for x, label in test)
        scores.append(hits / len(test))
    return scores
