"""Interventional Shapley attributions for the trained model families.

Value function: v(S) = mean over background rows b of f(z), where z takes
features in S from the explained row and the rest from b.  Three routes:

- exact_shapley: 2^M subset enumeration (the oracle; M capped at 12);
- sampled_shapley: seeded permutation estimator with Monte-Carlo stderr
  (logistic models past the brute-force cap);
- TreeShapExplainer / tree_shap: polynomial-time exact computation for
  tree ensembles, one pass over (tree leaf, background row) pairs.

Tree ensembles are explained in their additive margin space: logit for
boosting and AdaBoost's weighted vote, probability for forests.  Local
accuracy (base + sum(phi) = margin(x)) holds for all three routes.

The tree route works per leaf.  A leaf's region is an interval box over
the features on its path; against one background row, each boxed feature
falls in one of four cases: both x and b inside (no constraint), only x
inside (leaf needs j in S), only b inside (leaf needs j out of S), or
neither (leaf unreachable).  With p features forced in and q forced out,
summing the Shapley kernel w(s) = s!(M-s-1)!/M! over the free features
gives closed-form per-leaf weights, tabulated exactly via Fractions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from distresskit.errors import DataError
from distresskit.models import LinearModel, Model, TreeEnsemble, sigmoid
from distresskit.trees import Tree


@dataclass
class ShapExplanation:
    base_value: float
    attributions: np.ndarray
    model_output: float
    output_space: str  # probability | logit
    stderr: np.ndarray | None = None  # only for the sampled estimator

    @property
    def output_probability(self) -> float:
        """Sigmoid view of logit-space outputs, for readability."""
        if self.output_space == "probability":
            return self.model_output
        return float(sigmoid(np.asarray([self.model_output]))[0])

    def local_accuracy_gap(self) -> float:
        return abs(self.base_value + float(self.attributions.sum()) - self.model_output)


def _margin_fn(model) -> tuple[Callable[[np.ndarray], np.ndarray], str]:
    if callable(model) and not isinstance(model, (LinearModel, TreeEnsemble)):
        return model, "logit"
    if isinstance(model, LinearModel):
        return model.margin, "logit"
    if isinstance(model, TreeEnsemble):
        space = "probability" if model.combination == "average_probability" else "logit"
        return model.margin, space
    raise DataError(f"cannot explain object of type {type(model).__name__}")


def _check_background(background: np.ndarray, d: int) -> np.ndarray:
    background = np.asarray(background, dtype=np.float64)
    if background.ndim != 2 or background.shape[0] == 0:
        raise DataError("background must be a non-empty 2-D row set")
    if background.shape[1] != d:
        raise DataError(
            f"background has {background.shape[1]} features, expected {d}"
        )
    return background


@lru_cache(maxsize=32)
def _subset_weights(m: int) -> np.ndarray:
    """w(s) = s!(m-s-1)!/m! for s in 0..m-1, exact then floated."""
    fm = factorial(m)
    return np.asarray(
        [float(Fraction(factorial(s) * factorial(m - s - 1), fm)) for s in range(m)]
    )


def exact_shapley(
    model,
    x: np.ndarray,
    background: np.ndarray,
    max_features: int = 12,
) -> ShapExplanation:
    """Brute-force subset enumeration; the verification oracle.

    phi_j = sum over S not containing j of w(|S|) * (v(S+j) - v(S)).
    """
    fn, space = _margin_fn(model)
    x = np.asarray(x, dtype=np.float64).ravel()
    m = x.size
    if m > max_features:
        raise DataError(
            f"exact_shapley is capped at {max_features} features (2^M blowup), got {m}"
        )
    background = _check_background(background, m)
    n_masks = 1 << m
    masks = np.arange(n_masks)
    bits = (masks[:, None] >> np.arange(m)[None, :]) & 1  # (n_masks, m)
    composites = np.where(
        bits[:, None, :].astype(bool), x[None, None, :], background[None, :, :]
    )
    outputs = np.asarray(
        fn(composites.reshape(-1, m)), dtype=np.float64
    ).reshape(n_masks, background.shape[0])
    v = outputs.mean(axis=1)

    weights = _subset_weights(m)
    popcount = bits.sum(axis=1)
    phi = np.zeros(m)
    for j in range(m):
        without_j = masks[(masks >> j) & 1 == 0]
        w = weights[popcount[without_j]]
        phi[j] = float(np.sum(w * (v[without_j | (1 << j)] - v[without_j])))
    return ShapExplanation(
        base_value=float(v[0]),
        attributions=phi,
        model_output=float(v[n_masks - 1]),
        output_space=space,
    )


def sampled_shapley(
    model,
    x: np.ndarray,
    background: np.ndarray,
    *,
    n_permutations: int = 200,
    seed: int = 0,
) -> ShapExplanation:
    """Permutation-sampling estimator with per-feature Monte-Carlo stderr.

    Each permutation walks features from all-background to all-x and
    credits every feature its marginal change, so base + sum(phi) equals
    the model output exactly even at small sample counts.
    """
    fn, space = _margin_fn(model)
    x = np.asarray(x, dtype=np.float64).ravel()
    m = x.size
    background = _check_background(background, m)
    if n_permutations < 1:
        raise DataError(f"n_permutations must be >= 1, got {n_permutations}")
    rng = np.random.default_rng(seed)
    base = float(np.mean(fn(background)))
    marginals = np.empty((n_permutations, m))
    for t in range(n_permutations):
        order = rng.permutation(m)
        composite = background.copy()
        v_prev = base
        for j in order:
            composite[:, j] = x[j]
            v_next = float(np.mean(fn(composite)))
            marginals[t, j] = v_next - v_prev
            v_prev = v_next
    phi = marginals.mean(axis=0)
    if n_permutations > 1:
        stderr = marginals.std(axis=0, ddof=1) / np.sqrt(n_permutations)
    else:
        stderr = np.zeros(m)
    return ShapExplanation(
        base_value=base,
        attributions=phi,
        model_output=float(np.asarray(fn(x[None, :]))[0]),
        output_space=space,
        stderr=stderr,
    )


# ---------------------------------------------------------------------------
# tree route


@lru_cache(maxsize=32)
def _leaf_weight_tables(m: int) -> tuple[np.ndarray, np.ndarray]:
    """W+[p,q] and W-[p,q]: Shapley mass for include/exclude constraints.

    With p features forced into S, q forced out, and free = m - p - q
    unconstrained, a feature j in the forced-in set contributes
    +v * W+(p,q) where W+(p,q) = sum_r C(free,r) w(p-1+r); a forced-out
    feature contributes -v * W-(p,q) with W-(p,q) = sum_r C(free,r) w(p+r).
    Computed in exact rational arithmetic, floated once.
    """
    fm = factorial(m)
    w = [Fraction(factorial(s) * factorial(m - s - 1), fm) for s in range(m)]
    w_plus = np.zeros((m + 1, m + 1))
    w_minus = np.zeros((m + 1, m + 1))
    for p in range(m + 1):
        for q in range(m + 1 - p):
            free = m - p - q
            if p >= 1:
                w_plus[p, q] = float(
                    sum(comb(free, r) * w[p - 1 + r] for r in range(free + 1))
                )
            if q >= 1:
                w_minus[p, q] = float(
                    sum(comb(free, r) * w[p + r] for r in range(free + 1))
                )
    return w_plus, w_minus


@dataclass
class _LeafBox:
    value: float          # leaf payload already scaled into margin space
    features: np.ndarray  # distinct features on the path, ascending
    lows: np.ndarray      # region: lows < x[f] <= highs
    highs: np.ndarray
    b_in: np.ndarray      # (n_background, len(features)) membership cache


def _leaf_boxes(tree: Tree, scale: float, vote: bool, background: np.ndarray) -> list[_LeafBox]:
    boxes: list[_LeafBox] = []

    def descend(node: int, bounds: dict[int, tuple[float, float]]) -> None:
        f = int(tree.feature[node])
        if f < 0:
            raw = float(tree.value[node])
            value = (1.0 if raw >= 0.5 else -1.0) if vote else raw
            feats = np.asarray(sorted(bounds), dtype=np.int64)
            lows = np.asarray([bounds[k][0] for k in feats])
            highs = np.asarray([bounds[k][1] for k in feats])
            cols = background[:, feats]
            b_in = (lows[None, :] < cols) & (cols <= highs[None, :])
            boxes.append(
                _LeafBox(value=value * scale, features=feats, lows=lows, highs=highs, b_in=b_in)
            )
            return
        t = float(tree.threshold[node])
        lo, hi = bounds.get(f, (-np.inf, np.inf))
        left_hi = min(hi, t)   # left branch: x[f] <= t
        if lo < left_hi:       # descend unless the region (lo, left_hi] is empty
            left_bounds = dict(bounds)
            left_bounds[f] = (lo, left_hi)
            descend(int(tree.left[node]), left_bounds)
        right_lo = max(lo, t)  # right branch: x[f] > t
        if right_lo < hi:
            right_bounds = dict(bounds)
            right_bounds[f] = (right_lo, hi)
            descend(int(tree.right[node]), right_bounds)

    descend(0, {})
    return boxes


class TreeShapExplainer:
    """Reusable explainer: leaf regions and background memberships cached."""

    def __init__(self, ensemble: TreeEnsemble, background: np.ndarray):
        self.ensemble = ensemble
        m = ensemble.n_features_in
        self.background = _check_background(background, m)
        self.n_background = self.background.shape[0]
        self.m = m
        self._w_plus, self._w_minus = _leaf_weight_tables(m)
        self.output_space = (
            "probability" if ensemble.combination == "average_probability" else "logit"
        )
        # constant part of the margin that no feature can claim
        if ensemble.combination == "additive_logit":
            self._offset = ensemble.base_score
        elif ensemble.combination == "average_probability" and not ensemble.trees:
            self._offset = 0.5
        else:
            self._offset = 0.0
        vote = ensemble.combination == "weighted_vote"
        self._boxes: list[_LeafBox] = []
        for t, tree in enumerate(ensemble.trees):
            if ensemble.combination == "average_probability":
                scale = 1.0 / len(ensemble.trees)
            elif vote:
                scale = float(ensemble.tree_weights[t])
            else:
                scale = ensemble.learning_rate
            self._boxes.extend(_leaf_boxes(tree, scale, vote, self.background))

    def explain(self, x: np.ndarray) -> ShapExplanation:
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.size != self.m:
            raise DataError(f"row has {x.size} features, expected {self.m}")
        phi = np.zeros(self.m)
        base = self._offset
        inv_b = 1.0 / self.n_background
        for box in self._boxes:
            xv = x[box.features]
            x_in = (box.lows < xv) & (xv <= box.highs)
            dead = (~x_in[None, :] & ~box.b_in).any(axis=1)
            alive = ~dead
            if not alive.any():
                continue
            p_mask = x_in[None, :] & ~box.b_in
            n_mask = ~x_in[None, :] & box.b_in
            p = p_mask.sum(axis=1)
            q = n_mask.sum(axis=1)
            base += box.value * float(np.count_nonzero(alive & (p == 0))) * inv_b
            if box.features.size == 0:
                continue
            wp = self._w_plus[p, q]
            wm = self._w_minus[p, q]
            for local_j, f in enumerate(box.features):
                plus = alive & p_mask[:, local_j]
                minus = alive & n_mask[:, local_j]
                if plus.any():
                    phi[f] += box.value * float(wp[plus].sum()) * inv_b
                if minus.any():
                    phi[f] -= box.value * float(wm[minus].sum()) * inv_b
        output = float(self.ensemble.margin(x[None, :])[0])
        return ShapExplanation(
            base_value=float(base),
            attributions=phi,
            model_output=output,
            output_space=self.output_space,
        )


def tree_shap(
    ensemble: TreeEnsemble, x: np.ndarray, background: np.ndarray
) -> ShapExplanation:
    return TreeShapExplainer(ensemble, background).explain(x)


def explain_row(
    model: Model,
    x: np.ndarray,
    background: np.ndarray,
    *,
    max_features: int = 12,
    n_permutations: int = 200,
    seed: int = 0,
) -> ShapExplanation:
    """Route to the right algorithm for the model family and feature count."""
    if isinstance(model, TreeEnsemble):
        return tree_shap(model, x, background)
    d = np.asarray(x).ravel().size
    if d <= max_features:
        return exact_shapley(model, x, background, max_features=max_features)
    return sampled_shapley(
        model, x, background, n_permutations=n_permutations, seed=seed
    )


@dataclass
class GlobalImportance:
    importances: np.ndarray  # mean |phi| per feature
    ranking: list[int]       # feature indices, most important first
    feature_names: list[str] | None = None
    output_space: str = "logit"

    def ranked_names(self) -> list[str]:
        if self.feature_names is None:
            return [f"feature_{j}" for j in self.ranking]
        return [self.feature_names[j] for j in self.ranking]

    def to_dict(self) -> dict:
        names = self.feature_names or [
            f"feature_{j}" for j in range(self.importances.size)
        ]
        return {
            "output_space": self.output_space,
            "importances": {
                names[j]: float(self.importances[j])
                for j in range(self.importances.size)
            },
            "ranking": [names[j] for j in self.ranking],
        }


def global_importance(
    model: Model,
    rows: np.ndarray,
    background: np.ndarray,
    *,
    feature_names: list[str] | None = None,
    max_features: int = 12,
    n_permutations: int = 200,
    seed: int = 0,
) -> tuple[GlobalImportance, list[ShapExplanation]]:
    """Mean |phi| over an evaluation set, plus the per-row explanations."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise DataError("global_importance needs a non-empty 2-D row set")
    if isinstance(model, TreeEnsemble):
        explainer = TreeShapExplainer(model, background)
        explanations = [explainer.explain(rows[i]) for i in range(rows.shape[0])]
    else:
        explanations = [
            explain_row(
                model,
                rows[i],
                background,
                max_features=max_features,
                n_permutations=n_permutations,
                seed=seed,
            )
            for i in range(rows.shape[0])
        ]
    mat = np.stack([e.attributions for e in explanations])
    importances = np.abs(mat).mean(axis=0)
    order = np.lexsort((np.arange(importances.size), -importances))
    return (
        GlobalImportance(
            importances=importances,
            ranking=[int(j) for j in order],
            feature_names=feature_names,
            output_space=explanations[0].output_space,
        ),
        explanations,
    )


def save_shap_csv(
    explanations: Sequence[ShapExplanation],
    row_ids: Sequence[int],
    feature_names: Sequence[str],
    path: str | Path,
) -> None:
    """Per-row attribution dump: row id, base, output, then phi per feature."""
    path = Path(path)
    header = ["row_index", "base_value", "model_output"] + [
        f"phi_{name}" for name in feature_names
    ]
    lines = [",".join(header)]
    for rid, exp in zip(row_ids, explanations):
        cells = [str(int(rid)), repr(exp.base_value), repr(exp.model_output)]
        cells.extend(repr(float(v)) for v in exp.attributions)
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
