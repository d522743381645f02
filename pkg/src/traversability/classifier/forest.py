"""Random forest of Gini decision trees, grown from scratch on numpy."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class Tree:
    """Array-encoded binary tree. ``feature == -1`` marks a leaf.

    Samples go left when ``x[feature] <= threshold``. ``counts`` holds
    (non-traversable, traversable) training counts per node.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def leaf_index(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.intp)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        c = self.counts[self.leaf_index(X)]
        return c[:, 1] / c.sum(axis=1)

    @classmethod
    def leaf(cls, n_neg: float, n_pos: float) -> "Tree":
        return cls(np.array([-1]), np.array([0.0], np.float32), np.array([-1]), np.array([-1]),
                   np.array([[n_neg, n_pos]], dtype=np.float64))


def _best_split(Xn: np.ndarray, yn: np.ndarray, min_leaf: int):
    """Best (column, threshold, impurity) over the columns of Xn, or None."""
    n, m = Xn.shape
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    pos = np.cumsum(yn[order], axis=0)[:-1]
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    pos_right = yn.sum() - pos
    gini_left = 2.0 * pos * (n_left - pos) / n_left
    gini_right = 2.0 * pos_right * (n_right - pos_right) / n_right
    impurity = gini_left + gini_right
    valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    impurity = np.where(valid, impurity, np.inf)
    k = np.unravel_index(int(np.argmin(impurity)), impurity.shape)
    return int(k[1]), xs[k[0], k[1]], float(impurity[k])


def grow_tree(X: np.ndarray, y: np.ndarray, rng: np.random.Generator, max_features: int | None = None,
              min_leaf: int = 5) -> Tree:
    n, f = X.shape
    mtry = max_features or max(1, int(math.sqrt(f)))
    y = y.astype(np.float64)
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx):
        pos = float(y[idx].sum())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append((len(idx) - pos, pos))
        return len(feature) - 1

    stack = [(new_node(np.arange(n)), np.arange(n))]
    while stack:
        node, idx = stack.pop()
        neg, pos = counts[node]
        if neg == 0 or pos == 0 or len(idx) < 2 * min_leaf:
            continue
        cols = rng.choice(f, size=min(mtry, f), replace=False)
        best = _best_split(X[np.ix_(idx, cols)], y[idx], min_leaf)
        if best is None:
            continue
        col, thr, _ = best
        feat = int(cols[col])
        go_left = X[idx, feat] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node] = feat
        threshold[node] = thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri))
        stack.append((left[node], li))
    return Tree(
        np.array(feature, dtype=np.intp),
        np.array(threshold, dtype=X.dtype),
        np.array(left, dtype=np.intp),
        np.array(right, dtype=np.intp),
        np.array(counts, dtype=np.float64),
    )


@dataclass
class Forest:
    trees: list[Tree]
    seed: int = 0

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Mean over trees of the traversable-class leaf frequency."""
        X = np.asarray(X)
        if X.ndim == 1:
            X = X[None]
        total = np.zeros(len(X))
        for t in self.trees:
            total += t.predict_proba(X)
        return total / len(self.trees)


def fit_forest(X: np.ndarray, y: np.ndarray, n_trees: int = 10, seed: int = 0, min_leaf: int = 5,
               max_features: int | None = None) -> Forest:
    """Bagged trees with sqrt(F) random candidate features per split."""
    X = np.asarray(X)
    y = np.asarray(y).astype(np.int64)
    if len(y) == 0:
        raise ValueError("cannot fit a forest on an empty dataset")
    if n_trees < 1:
        raise ValueError("need at least one tree")
    rng = np.random.default_rng(seed)
    trees = []
    for child in rng.spawn(n_trees):
        boot = child.integers(len(y), size=len(y))
        trees.append(grow_tree(X[boot], y[boot], child, max_features, min_leaf))
    return Forest(trees, seed)
