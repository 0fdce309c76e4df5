"""Binary random forest (one-vs-all) with Gini splits, written on numpy.

Each tree is stored as flat arrays so prediction is a vectorised walk.
Trees draw their randomness from child seeds of one master seed, so the
forest is identical for any number of worker threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class DecisionTree:
    feature: np.ndarray     # -1 at leaves
    threshold: np.ndarray
    left: np.ndarray        # -1 at leaves
    right: np.ndarray
    value: np.ndarray       # positive-class probability
    depth: int

    @property
    def node_count(self) -> int:
        return self.feature.size

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        node = np.zeros(X.shape[0], dtype=int)
        rows = np.arange(X.shape[0])
        for _ in range(self.depth + 1):
            internal = self.left[node] >= 0
            if not internal.any():
                break
            f = self.feature[node]
            go_left = X[rows, np.maximum(f, 0)] <= self.threshold[node]
            nxt = np.where(go_left, self.left[node], self.right[node])
            node = np.where(internal, nxt, node)
        return self.value[node]


@dataclass(frozen=True, eq=False)
class RandomForest:
    trees: tuple[DecisionTree, ...]
    tree_count: int
    max_depth: int

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not self.trees:
            return np.zeros(X.shape[0])
        return np.mean([t.predict_proba(X) for t in self.trees], axis=0)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) > 0.5).astype(int)


def best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray):
    """Lowest weighted Gini split over the given features.

    Returns ``(impurity, feature, threshold)`` or None when every candidate
    feature is constant on this node.
    """
    n = y.size
    order = np.argsort(X[:, features], axis=0, kind="stable")
    xs = np.take_along_axis(X[:, features], order, axis=0)
    ys = y[order]
    pos_left = np.cumsum(ys, axis=0)[:-1]
    n_left = np.arange(1, n)[:, None]
    n_right = n - n_left
    pos_total = ys.sum(axis=0)
    pos_right = pos_total - pos_left
    p_l = pos_left / n_left
    p_r = pos_right / n_right
    gini = (n_left * 2 * p_l * (1 - p_l) + n_right * 2 * p_r * (1 - p_r)) / n
    splittable = xs[1:] > xs[:-1]
    if not splittable.any():
        return None
    gini = np.where(splittable, gini, np.inf)
    i, j = np.unravel_index(np.argmin(gini, axis=None), gini.shape)
    thr = 0.5 * (xs[i, j] + xs[i + 1, j])
    if thr >= xs[i + 1, j]:  # midpoint rounded up onto the right value
        thr = xs[i, j]
    return float(gini[i, j]), int(features[j]), float(thr)


def _n_candidates(max_features, n_features: int) -> int:
    if max_features is None:
        return n_features
    if max_features == "sqrt":
        return max(1, int(round(np.sqrt(n_features))))
    return max(1, min(int(max_features), n_features))


def grow_tree(X: np.ndarray, y: np.ndarray, max_depth: int, rng: np.random.Generator,
              max_features="sqrt", min_samples_split: int = 2) -> DecisionTree:
    n_features = X.shape[1]
    m = _n_candidates(max_features, n_features)
    feature, threshold, left, right, value = [], [], [], [], []
    max_seen = 0

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(y[idx].mean()) if idx.size else 0.0)
        return len(feature) - 1

    stack = [(new_node(np.arange(y.size)), np.arange(y.size), 0)]
    while stack:
        node, idx, depth = stack.pop()
        max_seen = max(max_seen, depth)
        yn = y[idx]
        if depth >= max_depth or idx.size < min_samples_split or yn.min() == yn.max():
            continue
        perm = rng.permutation(n_features)
        split = None
        # keep drawing features past the quota only while all drawn ones are constant
        for start in range(0, n_features, m):
            split = best_split(X[idx], yn, perm[start:start + m])
            if split is not None:
                break
        if split is None:
            continue
        _, f, thr = split
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return DecisionTree(np.array(feature), np.array(threshold), np.array(left),
                        np.array(right), np.array(value), max_seen)


def train_forest(positives, negatives, tree_count: int = 100, max_depth: int = 30,
                 seed: int = 0, max_features="sqrt", bootstrap: bool = True,
                 workers: int = 1) -> RandomForest:
    """One-vs-all forest: ``positives`` is the target class, ``negatives`` the rest."""
    pos = np.atleast_2d(np.asarray(positives, dtype=float))
    neg = np.atleast_2d(np.asarray(negatives, dtype=float))
    if pos.shape[0] == 0 or neg.shape[0] == 0:
        raise ValueError("both classes need at least one sample")
    X = np.vstack([pos, neg])
    y = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    seeds = np.random.SeedSequence(seed).spawn(tree_count)

    def build(ss):
        rng = np.random.default_rng(ss)
        if bootstrap:
            sample = rng.integers(0, len(y), size=len(y))
            return grow_tree(X[sample], y[sample], max_depth, rng, max_features)
        return grow_tree(X, y, max_depth, rng, max_features)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            trees = tuple(pool.map(build, seeds))
    else:
        trees = tuple(build(s) for s in seeds)
    return RandomForest(trees, tree_count, max_depth)
