"""Decision tree engine: exact greedy CART and Newton-gain growth.

Trees are stored as parallel node arrays (feature index -1 marks a leaf).
Routing rule everywhere: x[feature] <= threshold goes left, else right.
Split search is exact: every midpoint between distinct consecutive sorted
values of every candidate feature is evaluated; ties break toward the
lower feature index, then the lower threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from distresskit.errors import FitError

# gains below this are treated as zero so float noise never forces a split
MIN_GAIN = 1e-12


@dataclass
class Tree:
    feature: np.ndarray   # int32; -1 on leaves
    threshold: np.ndarray  # float64; 0.0 on leaves
    left: np.ndarray      # int32; -1 on leaves
    right: np.ndarray     # int32; -1 on leaves
    value: np.ndarray     # float64; leaf payload, 0.0 on internal nodes

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of X."""
        node = np.zeros(X.shape[0], dtype=np.int32)
        while True:
            feat = self.feature[node]
            active = np.flatnonzero(feat >= 0)
            if active.size == 0:
                return node
            cur = node[active]
            go_left = X[active, feat[active]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def used_features(self) -> set[int]:
        return {int(f) for f in self.feature if f >= 0}

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Tree":
        return cls(
            feature=np.asarray(doc["feature"], dtype=np.int32),
            threshold=np.asarray(doc["threshold"], dtype=np.float64),
            left=np.asarray(doc["left"], dtype=np.int32),
            right=np.asarray(doc["right"], dtype=np.int32),
            value=np.asarray(doc["value"], dtype=np.float64),
        )


@dataclass
class _Builder:
    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)

    def reserve(self) -> int:
        for arr in (self.feature, self.left, self.right):
            arr.append(-1)
        self.threshold.append(0.0)
        self.value.append(0.0)
        return len(self.feature) - 1

    def set_leaf(self, node: int, value: float) -> None:
        self.value[node] = float(value)

    def set_internal(self, node: int, f: int, t: float, lo: int, hi: int) -> None:
        self.feature[node] = int(f)
        self.threshold[node] = float(t)
        self.left[node] = lo
        self.right[node] = hi
        self.value[node] = 0.0

    def build(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            value=np.asarray(self.value, dtype=np.float64),
        )


def _candidate_features(
    d: int, n_subsample: int | None, rng: np.random.Generator | None
) -> np.ndarray:
    if n_subsample is None or n_subsample >= d:
        return np.arange(d)
    if rng is None:
        raise FitError("feature subsampling requires an rng")
    # sorted so the lower-feature-index tie rule applies within the draw
    return np.sort(rng.choice(d, size=n_subsample, replace=False))


# A split finder maps (rows, features) -> (gain, feature, threshold) or None.
SplitFinder = Callable[[np.ndarray, np.ndarray], "tuple[float, int, float] | None"]


def _grow(
    X: np.ndarray,
    rows: np.ndarray,
    *,
    find_split: SplitFinder,
    leaf_value: Callable[[np.ndarray], float],
    is_pure: Callable[[np.ndarray], bool],
    max_depth: int,
    min_samples_leaf: int,
    n_feature_subsample: int | None,
    rng: np.random.Generator | None,
) -> Tree:
    builder = _Builder()

    def recurse(rows: np.ndarray, depth: int) -> int:
        node = builder.reserve()
        if (
            depth >= max_depth
            or rows.size < 2 * min_samples_leaf
            or is_pure(rows)
        ):
            builder.set_leaf(node, leaf_value(rows))
            return node
        feats = _candidate_features(X.shape[1], n_feature_subsample, rng)
        best = find_split(rows, feats)
        if best is None:
            builder.set_leaf(node, leaf_value(rows))
            return node
        _, f, t = best
        mask = X[rows, f] <= t
        left_id = recurse(rows[mask], depth + 1)
        right_id = recurse(rows[~mask], depth + 1)
        builder.set_internal(node, f, t, left_id, right_id)
        return node

    recurse(rows, 0)
    return builder.build()


def grow_classification_tree(
    X: np.ndarray,
    y: np.ndarray,
    *,
    sample_weight: np.ndarray | None = None,
    max_depth: int = 8,
    min_samples_leaf: int = 1,
    n_feature_subsample: int | None = None,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Greedy CART on weighted Gini impurity; leaves hold P(label == 1).

    Recursion stops at max_depth, node purity, fewer than
    2 * min_samples_leaf rows, or when no candidate split has positive
    impurity reduction.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if n < max(1, 2 * min_samples_leaf):
        raise FitError(
            f"insufficient rows: {n} < 2 * min_samples_leaf = {2 * min_samples_leaf}"
        )
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    wy = w * y

    def leaf_value(rows: np.ndarray) -> float:
        wt = w[rows].sum()
        return float(wy[rows].sum() / wt) if wt > 0 else 0.5

    def is_pure(rows: np.ndarray) -> bool:
        yr = y[rows]
        return bool(np.all(yr == yr[0]))

    def find_split(rows, feats):
        return _best_gini_split(X, w, wy, rows, feats, min_samples_leaf)

    return _grow(
        X,
        np.arange(n),
        find_split=find_split,
        leaf_value=leaf_value,
        is_pure=is_pure,
        max_depth=max_depth,
        min_samples_leaf=min_samples_leaf,
        n_feature_subsample=n_feature_subsample,
        rng=rng,
    )


def _best_gini_split(X, w, wy, rows, feats, min_leaf):
    n = rows.size
    wr = w[rows]
    wyr = wy[rows]
    w_total = wr.sum()
    w1_total = wyr.sum()
    if w_total <= 0:
        return None
    p = w1_total / w_total
    parent_gini = 2.0 * p * (1.0 - p)
    counts_left = np.arange(1, n)

    best: tuple[float, int, float] | None = None
    for f in feats:
        vals = X[rows, f]
        order = np.argsort(vals, kind="stable")
        v = vals[order]
        cw = np.cumsum(wr[order])[:-1]
        cw1 = np.cumsum(wyr[order])[:-1]
        valid = (
            (v[:-1] < v[1:])
            & (counts_left >= min_leaf)
            & ((n - counts_left) >= min_leaf)
            & (cw > 0.0)
            & ((w_total - cw) > 0.0)
        )
        if not valid.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            w_right = w_total - cw
            p_left = cw1 / cw
            p_right = (w1_total - cw1) / w_right
            gain = (
                parent_gini
                - (cw / w_total) * 2.0 * p_left * (1.0 - p_left)
                - (w_right / w_total) * 2.0 * p_right * (1.0 - p_right)
            )
        gain[~valid] = -np.inf
        i = int(np.argmax(gain))
        if gain[i] > MIN_GAIN and (best is None or gain[i] > best[0]):
            best = (float(gain[i]), int(f), float((v[i] + v[i + 1]) / 2.0))
    return best


def grow_newton_tree(
    X: np.ndarray,
    gradients: np.ndarray,
    hessians: np.ndarray,
    *,
    max_depth: int = 6,
    min_samples_leaf: int = 1,
    reg_lambda: float = 1.0,
    min_child_weight: float = 1.0,
    n_feature_subsample: int | None = None,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Second-order boosting tree; leaf weight -G / (H + reg_lambda).

    Split gain is 0.5 * [G_L^2/(H_L+lam) + G_R^2/(H_R+lam) - G^2/(H+lam)];
    candidates whose child hessian sum falls below min_child_weight are
    skipped.
    """
    X = np.asarray(X, dtype=np.float64)
    g = np.asarray(gradients, dtype=np.float64)
    h = np.asarray(hessians, dtype=np.float64)
    n = X.shape[0]
    if n < max(1, 2 * min_samples_leaf):
        raise FitError(
            f"insufficient rows: {n} < 2 * min_samples_leaf = {2 * min_samples_leaf}"
        )

    def leaf_value(rows: np.ndarray) -> float:
        return float(-g[rows].sum() / (h[rows].sum() + reg_lambda))

    def find_split(rows, feats):
        return _best_newton_split(
            X, g, h, rows, feats, min_samples_leaf, reg_lambda, min_child_weight
        )

    return _grow(
        X,
        np.arange(n),
        find_split=find_split,
        leaf_value=leaf_value,
        is_pure=lambda rows: False,
        max_depth=max_depth,
        min_samples_leaf=min_samples_leaf,
        n_feature_subsample=n_feature_subsample,
        rng=rng,
    )


def _best_newton_split(X, g, h, rows, feats, min_leaf, reg_lambda, min_child_weight):
    n = rows.size
    gr = g[rows]
    hr = h[rows]
    g_total = gr.sum()
    h_total = hr.sum()
    parent_score = g_total * g_total / (h_total + reg_lambda)
    counts_left = np.arange(1, n)

    best: tuple[float, int, float] | None = None
    for f in feats:
        vals = X[rows, f]
        order = np.argsort(vals, kind="stable")
        v = vals[order]
        cg = np.cumsum(gr[order])[:-1]
        ch = np.cumsum(hr[order])[:-1]
        h_right = h_total - ch
        valid = (
            (v[:-1] < v[1:])
            & (counts_left >= min_leaf)
            & ((n - counts_left) >= min_leaf)
            & (ch >= min_child_weight)
            & (h_right >= min_child_weight)
        )
        if not valid.any():
            continue
        g_right = g_total - cg
        gain = 0.5 * (
            cg * cg / (ch + reg_lambda)
            + g_right * g_right / (h_right + reg_lambda)
            - parent_score
        )
        gain[~valid] = -np.inf
        i = int(np.argmax(gain))
        if gain[i] > MIN_GAIN and (best is None or gain[i] > best[0]):
            best = (float(gain[i]), int(f), float((v[i] + v[i + 1]) / 2.0))
    return best
