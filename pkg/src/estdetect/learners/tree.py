"""CART classification trees (Gini) and bagged random forests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch

_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray    # -1 marks a leaf
    threshold: np.ndarray  # go left when x[feature] <= threshold
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray      # fraction of class-1 training samples in the node
    n_features: int

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def score(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} features, got {X.shape[1]}")
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            inner = feat >= 0
            if not inner.any():
                break
            r, nd = rows[inner], node[inner]
            go_left = X[r, feat[inner]] <= self.threshold[nd]
            node[inner] = np.where(go_left, self.left[nd], self.right[nd])
        return self.value[node]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            np.array(d["feature"], dtype=np.int64),
            np.array(d["threshold"], dtype=np.float64),
            np.array(d["left"], dtype=np.int64),
            np.array(d["right"], dtype=np.int64),
            np.array(d["value"], dtype=np.float64),
            int(d["n_features"]),
        )


def best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray):
    """Lowest weighted-Gini split over ``features`` (ascending).

    Returns ``(feature, threshold, impurity)`` or ``None`` when no feature
    has two distinct values.  Near-equal impurities (relative 1e-12) are
    ties and go to the lowest feature index, then the lowest threshold.
    """
    n = y.size
    V = X[:, features]
    order = np.argsort(V, axis=0, kind="stable")
    Vs = np.take_along_axis(V, order, axis=0)
    Ys = y[order]
    valid = Vs[1:] > Vs[:-1]
    if not valid.any():
        return None
    c1 = np.cumsum(Ys, axis=0)[:-1].astype(np.float64)
    nl = np.arange(1, n, dtype=np.float64)[:, None]
    nr = n - nl
    r1 = Ys.sum(axis=0)[None, :] - c1
    # n/2 times the weighted Gini impurity of the two children
    imp = c1 * (nl - c1) / nl + r1 * (nr - r1) / nr
    imp = np.where(valid, imp, np.inf)
    best = imp.min()
    tied = imp <= best + _TIE_RTOL * max(best, 1.0)
    col = int(np.argmax(tied.any(axis=0)))
    row = int(np.argmax(tied[:, col]))
    lo, hi = Vs[row, col], Vs[row + 1, col]
    thr = lo + (hi - lo) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return int(features[col]), float(thr), float(imp[row, col] * 2.0 / n)


def build_tree(X: np.ndarray, y: np.ndarray, max_depth: int = 10,
               max_features: int | None = None, rng: np.random.Generator | None = None) -> Tree:
    """Greedy CART growth until purity, ``max_depth`` or no valid split.

    Zero-gain splits are allowed, so XOR-like patterns are still separated.
    ``max_features`` < n_features draws a fresh sorted feature subset at
    every node from ``rng``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    if n == 0:
        raise ValueError("cannot grow a tree on zero samples")
    subsample = max_features is not None and max_features < d
    if subsample and rng is None:
        raise ValueError("feature subsampling needs an rng")
    all_features = np.arange(d)

    feature, threshold, left, right, value = [], [], [], [], []
    stack = [(np.arange(n), 0, -1, False)]
    while stack:
        idx, depth, parent, is_right = stack.pop()
        node = len(feature)
        if parent >= 0:
            (right if is_right else left)[parent] = node
        ys = y[idx]
        frac = float(ys.mean())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(frac)
        if depth >= max_depth or idx.size < 2 or frac in (0.0, 1.0):
            continue
        feats = np.sort(rng.choice(d, size=max_features, replace=False)) if subsample else all_features
        split = best_split(X[idx], ys, feats)
        if split is None:
            continue
        f, thr, _ = split
        go_left = X[idx, f] <= thr
        feature[node], threshold[node] = f, thr
        # right pushed first so the left subtree gets the lower node ids
        stack.append((idx[~go_left], depth + 1, node, True))
        stack.append((idx[go_left], depth + 1, node, False))
    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
        d,
    )


def resolve_max_features(max_features, d: int) -> int | None:
    if max_features is None or max_features == "all":
        return None
    if max_features == "sqrt":
        return max(1, int(np.sqrt(d)))
    return max(1, min(int(max_features), d))


def build_forest(X: np.ndarray, y: np.ndarray, n_estimators: int = 100, max_depth: int = 10,
                 max_features="sqrt", bootstrap: bool = True, seed: int = 0) -> list[Tree]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    mf = resolve_max_features(max_features, d)
    trees = []
    for child in np.random.SeedSequence(int(seed)).spawn(int(n_estimators)):
        rng = np.random.Generator(np.random.PCG64(child))
        idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(build_tree(X[idx], y[idx], max_depth, mf, rng))
    return trees
