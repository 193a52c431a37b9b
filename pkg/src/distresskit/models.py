"""Model families: logistic regression, CART, forest, AdaBoost, Newton GBDT.

Everything trains on dense float64 matrices with 0/1 labels and predicts
class-1 probabilities.  The three gradient-boosting presets (xgboost,
catboost, lightgbm) share one engine and differ only in default
hyperparameters; see GBDT_PRESETS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from distresskit.errors import ConfigError, FitError, SchemaError
from distresskit.seeding import derive_seed
from distresskit.trees import Tree, grow_classification_tree, grow_newton_tree

MODEL_SCHEMA_VERSION = 1

FAMILIES = ("logistic", "tree", "forest", "adaboost", "gbdt")

ALLOWED_HYPERPARAMETERS: dict[str, frozenset[str]] = {
    "logistic": frozenset({"l2_lambda", "max_iter", "tol"}),
    "tree": frozenset({"max_depth", "min_samples_leaf", "feature_subsample"}),
    "forest": frozenset(
        {"n_trees", "max_depth", "feature_subsample", "min_samples_leaf", "bootstrap"}
    ),
    "adaboost": frozenset({"n_rounds"}),
    "gbdt": frozenset(
        {
            "n_trees",
            "learning_rate",
            "max_depth",
            "reg_lambda",
            "min_child_weight",
            "subsample",
            "preset",
        }
    ),
}

FAMILY_DEFAULTS: dict[str, dict] = {
    "logistic": {"l2_lambda": 1e-3, "max_iter": 500, "tol": 1e-6},
    "tree": {"max_depth": 8, "min_samples_leaf": 1, "feature_subsample": None},
    "forest": {
        "n_trees": 200,
        "max_depth": 12,
        "feature_subsample": "sqrt",
        "min_samples_leaf": 1,
        "bootstrap": True,
    },
    "adaboost": {"n_rounds": 100},
    "gbdt": {"preset": "xgboost"},
}

# The three boosting presets stand in for the proprietary libraries.  Same
# engine, different default knobs; explicit hyperparameters always win.
GBDT_PRESETS: dict[str, dict] = {
    "xgboost": {
        "n_trees": 200,
        "learning_rate": 0.1,
        "max_depth": 6,
        "reg_lambda": 1.0,
        "min_child_weight": 1.0,
        "subsample": 1.0,
    },
    "catboost": {
        "n_trees": 200,
        "learning_rate": 0.1,
        "max_depth": 6,
        "reg_lambda": 3.0,
        "min_child_weight": 1.0,
        "subsample": 1.0,
    },
    "lightgbm": {
        "n_trees": 200,
        "learning_rate": 0.1,
        "max_depth": 5,
        "reg_lambda": 0.0,
        "min_child_weight": 1e-3,
        "subsample": 1.0,
    },
}


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softplus(z: np.ndarray) -> np.ndarray:
    # log(1 + e^z), stable on both tails
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _check_two_classes(y: np.ndarray) -> None:
    if np.unique(y).size < 2:
        raise FitError("single-class input: training labels contain only one class")


def _resolve_feature_subsample(value, d: int) -> int | None:
    """Map a feature_subsample setting to a per-split draw count (None = all)."""
    if value is None or value == "all":
        return None
    if value == "sqrt":
        m = int(math.floor(math.sqrt(d)))
        return m if m < d else None
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        if value < 1:
            raise ConfigError(f"feature_subsample must be >= 1, got {value}")
        return int(value) if value < d else None
    raise ConfigError(f"feature_subsample must be None, 'all', 'sqrt', or int, got {value!r}")


# ---------------------------------------------------------------------------
# model containers


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    l2_lambda: float

    @property
    def n_features_in(self) -> int:
        return int(self.weights.size)

    def margin(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights + self.bias


@dataclass
class TreeEnsemble:
    trees: list[Tree]
    tree_weights: np.ndarray
    combination: str  # average_probability | weighted_vote | additive_logit
    n_features_in: int
    base_score: float = 0.0
    learning_rate: float = 1.0

    def __post_init__(self) -> None:
        if self.combination not in ("average_probability", "weighted_vote", "additive_logit"):
            raise ConfigError(f"unknown combination rule {self.combination!r}")
        if len(self.trees) != self.tree_weights.size:
            raise ConfigError("tree_weights length must match number of trees")

    def margin(self, X: np.ndarray) -> np.ndarray:
        """Pre-link combination: probability for forests, additive score otherwise."""
        n = X.shape[0]
        if self.combination == "average_probability":
            if not self.trees:
                return np.full(n, 0.5)
            acc = np.zeros(n)
            for tree in self.trees:
                acc += tree.predict(X)
            return acc / len(self.trees)
        if self.combination == "weighted_vote":
            score = np.zeros(n)
            for tree, alpha in zip(self.trees, self.tree_weights):
                votes = np.where(tree.predict(X) >= 0.5, 1.0, -1.0)
                score += alpha * votes
            return score
        acc = np.zeros(n)
        for tree in self.trees:
            acc += tree.predict(X)
        return self.base_score + self.learning_rate * acc


Model = Union[LinearModel, TreeEnsemble, Tree]


def predict_proba(model: Model, X: np.ndarray) -> np.ndarray:
    """Class-1 probability per row; raises SchemaError on column mismatch."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise SchemaError(f"expected a 2-D matrix, got ndim={X.ndim}")
    if isinstance(model, Tree):
        # a bare tree records no training width; check what it can
        used = model.used_features()
        if used and X.shape[1] <= max(used):
            raise SchemaError(
                f"schema mismatch: tree splits on feature {max(used)}, "
                f"matrix has {X.shape[1]} columns"
            )
        p = model.predict(X)
        if not np.all(np.isfinite(p)):
            raise FitError("non-finite output from predict_proba")
        return p
    if X.shape[1] != model.n_features_in:
        raise SchemaError(
            f"schema mismatch: model expects {model.n_features_in} features, "
            f"got {X.shape[1]}"
        )
    if isinstance(model, LinearModel):
        p = sigmoid(model.margin(X))
    elif model.combination == "average_probability":
        p = model.margin(X)
    elif model.combination == "weighted_vote":
        p = sigmoid(2.0 * model.margin(X))
    else:
        p = sigmoid(model.margin(X))
    if not np.all(np.isfinite(p)):
        raise FitError("non-finite output from predict_proba")
    return p


def predict_margin(model: Model, X: np.ndarray) -> np.ndarray:
    """Additive (pre-link) score in the space where contributions sum."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != model.n_features_in:
        raise SchemaError(
            f"schema mismatch: model expects {model.n_features_in} features, "
            f"got {X.shape[1]}"
        )
    return model.margin(X)


# ---------------------------------------------------------------------------
# training routines


def train_logistic(
    X: np.ndarray,
    y: np.ndarray,
    *,
    l2_lambda: float = 1e-3,
    max_iter: int = 500,
    tol: float = 1e-6,
) -> LinearModel:
    """Full-batch gradient descent with Armijo backtracking.

    Objective: mean logistic loss + (l2_lambda / 2) * ||w||^2, bias
    unregularized.  Stops when the gradient infinity-norm drops below
    tol, after max_iter steps, or when backtracking cannot improve.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_two_classes(y)
    if l2_lambda < 0:
        raise ConfigError(f"l2_lambda must be >= 0, got {l2_lambda}")
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    z = np.zeros(n)

    def objective(z_vec: np.ndarray, w_vec: np.ndarray) -> float:
        data = float(np.mean(_softplus(z_vec) - y * z_vec))
        return data + 0.5 * l2_lambda * float(w_vec @ w_vec)

    loss = objective(z, w)
    for _ in range(max_iter):
        if not math.isfinite(loss):
            raise FitError("non-finite loss during logistic training")
        p = sigmoid(z)
        resid = (p - y) / n
        grad_w = X.T @ resid + l2_lambda * w
        grad_b = float(resid.sum())
        if max(float(np.max(np.abs(grad_w))), abs(grad_b)) < tol:
            break
        dz = X @ grad_w + grad_b
        grad_sq = float(grad_w @ grad_w) + grad_b * grad_b
        step = 1.0
        accepted = False
        for _ in range(60):
            w_trial = w - step * grad_w
            z_trial = z - step * dz
            loss_trial = objective(z_trial, w_trial)
            if loss_trial <= loss - 1e-4 * step * grad_sq:
                w = w_trial
                b = b - step * grad_b
                z = z_trial
                loss = loss_trial
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    return LinearModel(weights=w, bias=float(b), l2_lambda=float(l2_lambda))


def logistic_objective(
    model: LinearModel, X: np.ndarray, y: np.ndarray
) -> float:
    """Training objective at the model's parameters (used by oracles)."""
    z = np.asarray(X, dtype=np.float64) @ model.weights + model.bias
    data = float(np.mean(_softplus(z) - np.asarray(y, dtype=np.float64) * z))
    return data + 0.5 * model.l2_lambda * float(model.weights @ model.weights)


def logistic_gradient(
    weights: np.ndarray, bias: float, X: np.ndarray, y: np.ndarray, l2_lambda: float
) -> tuple[np.ndarray, float]:
    """Analytic gradient of the logistic objective at (weights, bias)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    p = sigmoid(X @ weights + bias)
    resid = (p - y) / n
    return X.T @ resid + l2_lambda * weights, float(resid.sum())


def train_tree(
    X: np.ndarray,
    y: np.ndarray,
    *,
    max_depth: int = 8,
    min_samples_leaf: int = 1,
    feature_subsample=None,
    split_criterion: str = "gini",
    hessians: np.ndarray | None = None,
    reg_lambda: float = 0.0,
    min_child_weight: float = 0.0,
    seed: int = 0,
) -> Tree:
    """Single CART tree.

    split_criterion 'gini' treats y as 0/1 labels; 'newton' treats y as
    per-row gradients and requires hessians (the boosting path).
    """
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    m = _resolve_feature_subsample(feature_subsample, d)
    rng = np.random.default_rng(derive_seed(seed, "tree", 0)) if m is not None else None
    if split_criterion == "gini":
        return grow_classification_tree(
            X,
            y,
            max_depth=max_depth,
            min_samples_leaf=min_samples_leaf,
            n_feature_subsample=m,
            rng=rng,
        )
    if split_criterion == "newton":
        if hessians is None:
            raise ConfigError("newton criterion requires hessians")
        return grow_newton_tree(
            X,
            y,
            hessians,
            max_depth=max_depth,
            min_samples_leaf=min_samples_leaf,
            reg_lambda=reg_lambda,
            min_child_weight=min_child_weight,
            n_feature_subsample=m,
            rng=rng,
        )
    raise ConfigError(f"unknown split_criterion {split_criterion!r}")


def train_forest(
    X: np.ndarray,
    y: np.ndarray,
    *,
    n_trees: int = 200,
    max_depth: int = 12,
    feature_subsample="sqrt",
    min_samples_leaf: int = 1,
    bootstrap: bool = True,
    seed: int = 0,
) -> TreeEnsemble:
    """Random forest: bootstrap rows per tree, re-drawn feature subset per split.

    Tree t gets its own generator seeded by derive_seed(seed, "tree", t),
    so the ensemble is reproducible regardless of evaluation order.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_two_classes(y)
    n, d = X.shape
    m = _resolve_feature_subsample(feature_subsample, d)
    trees: list[Tree] = []
    for t in range(n_trees):
        rng = np.random.default_rng(derive_seed(seed, "tree", t))
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(
            grow_classification_tree(
                X[rows],
                y[rows],
                max_depth=max_depth,
                min_samples_leaf=min_samples_leaf,
                n_feature_subsample=m,
                rng=rng,
            )
        )
    return TreeEnsemble(
        trees=trees,
        tree_weights=np.ones(len(trees)),
        combination="average_probability",
        n_features_in=d,
    )


def train_adaboost(
    X: np.ndarray,
    y: np.ndarray,
    *,
    n_rounds: int = 100,
    seed: int = 0,
) -> TreeEnsemble:
    """SAMME with depth-1 weighted-Gini stumps on labels in {-1, +1}.

    A round with weighted error >= 0.5 aborts without keeping its stump;
    a perfect round (error 0) is kept with the error clamped to 1e-12 and
    ends training.  `seed` is accepted for interface symmetry; the
    algorithm itself is deterministic.
    """
    del seed  # exact greedy stumps involve no randomness
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_two_classes(y)
    n, d = X.shape
    y_pm = 2.0 * y - 1.0
    w = np.full(n, 1.0 / n)
    trees: list[Tree] = []
    alphas: list[float] = []
    for _ in range(n_rounds):
        stump = grow_classification_tree(
            X, y, sample_weight=w, max_depth=1, min_samples_leaf=1
        )
        h = np.where(stump.predict(X) >= 0.5, 1.0, -1.0)
        eps = float(w[h != y_pm].sum())
        if eps >= 0.5:
            break
        eps_clamped = max(eps, 1e-12)
        alpha = 0.5 * math.log((1.0 - eps_clamped) / eps_clamped)
        trees.append(stump)
        alphas.append(alpha)
        if eps <= 0.0:
            break
        w = w * np.exp(-alpha * y_pm * h)
        w = w / w.sum()
    return TreeEnsemble(
        trees=trees,
        tree_weights=np.asarray(alphas, dtype=np.float64),
        combination="weighted_vote",
        n_features_in=d,
    )


def resolve_gbdt_params(hyperparameters: dict) -> dict:
    """Merge a preset's defaults with explicit overrides; returns full params."""
    hp = dict(hyperparameters)
    preset = hp.pop("preset", "xgboost")
    if preset not in GBDT_PRESETS:
        raise ConfigError(
            f"unknown gbdt preset {preset!r}; expected one of {sorted(GBDT_PRESETS)}"
        )
    params = dict(GBDT_PRESETS[preset])
    for key, value in hp.items():
        if key not in params:
            raise ConfigError(f"unknown gbdt hyperparameter {key!r}")
        params[key] = value
    params["preset"] = preset
    return params


def train_gbdt(
    X: np.ndarray,
    y: np.ndarray,
    *,
    n_trees: int | None = None,
    learning_rate: float | None = None,
    max_depth: int | None = None,
    reg_lambda: float | None = None,
    min_child_weight: float | None = None,
    subsample: float | None = None,
    preset: str | None = None,
    seed: int = 0,
) -> TreeEnsemble:
    """Newton-step gradient boosting on logistic loss.

    base_score = ln(p / (1 - p)) for base rate p; per round the gradient
    is p_i - y_i and the hessian p_i (1 - p_i), and a tree grown on the
    Newton gain is added with the given learning rate.
    """
    explicit = {
        "n_trees": n_trees,
        "learning_rate": learning_rate,
        "max_depth": max_depth,
        "reg_lambda": reg_lambda,
        "min_child_weight": min_child_weight,
        "subsample": subsample,
    }
    hp = {k: v for k, v in explicit.items() if v is not None}
    if preset is not None:
        hp["preset"] = preset
    params = resolve_gbdt_params(hp)

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_two_classes(y)
    n, d = X.shape
    p_base = float(y.mean())
    base_score = math.log(p_base / (1.0 - p_base))
    scores = np.full(n, base_score)
    frac = float(params["subsample"])
    if not 0.0 < frac <= 1.0:
        raise ConfigError(f"subsample must be in (0, 1], got {frac}")
    rng = np.random.default_rng(derive_seed(seed, "gbdt", 0))
    trees: list[Tree] = []
    for _ in range(int(params["n_trees"])):
        p = sigmoid(scores)
        g = p - y
        h = p * (1.0 - p)
        if frac < 1.0:
            rows = np.sort(rng.choice(n, size=max(1, int(round(frac * n))), replace=False))
        else:
            rows = np.arange(n)
        tree = grow_newton_tree(
            X[rows],
            g[rows],
            h[rows],
            max_depth=int(params["max_depth"]),
            min_samples_leaf=1,
            reg_lambda=float(params["reg_lambda"]),
            min_child_weight=float(params["min_child_weight"]),
        )
        trees.append(tree)
        scores = scores + float(params["learning_rate"]) * tree.predict(X)
        if not np.all(np.isfinite(scores)):
            raise FitError("non-finite score during gbdt training")
    return TreeEnsemble(
        trees=trees,
        tree_weights=np.ones(len(trees)),
        combination="additive_logit",
        n_features_in=d,
        base_score=base_score,
        learning_rate=float(params["learning_rate"]),
    )


# ---------------------------------------------------------------------------
# spec parsing and the generic entry point


@dataclass(frozen=True)
class ModelSpec:
    """Declarative recipe: family + hyperparameters + seed.

    Unknown hyperparameter keys are rejected here, at parse time, so a
    typo in a config file fails before any training starts.
    """

    family: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0
    name: str | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(
                f"unknown model family {self.family!r}; expected one of {FAMILIES}"
            )
        allowed = ALLOWED_HYPERPARAMETERS[self.family]
        unknown = sorted(set(self.hyperparameters) - set(allowed))
        if unknown:
            raise ConfigError(
                f"unknown hyperparameter keys for family {self.family!r}: {unknown}"
            )
        if self.family == "gbdt":
            resolve_gbdt_params(self.hyperparameters)  # validates the preset

    @property
    def display_name(self) -> str:
        if self.name:
            return self.name
        if self.family == "gbdt":
            return str(self.hyperparameters.get("preset", "xgboost"))
        return self.family

    def resolved_hyperparameters(self) -> dict:
        if self.family == "gbdt":
            return resolve_gbdt_params(self.hyperparameters)
        merged = dict(FAMILY_DEFAULTS[self.family])
        merged.update(self.hyperparameters)
        return merged

    def to_dict(self) -> dict:
        doc = {
            "family": self.family,
            "hyperparameters": dict(self.hyperparameters),
            "seed": self.seed,
        }
        if self.name is not None:
            doc["name"] = self.name
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelSpec":
        if not isinstance(doc, dict):
            raise ConfigError(f"model spec must be a table, got {type(doc).__name__}")
        known = {"family", "hyperparameters", "seed", "name"}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown model spec keys: {unknown}")
        if "family" not in doc:
            raise ConfigError("model spec requires a 'family' key")
        hp = doc.get("hyperparameters", {})
        if not isinstance(hp, dict):
            raise ConfigError("hyperparameters must be a table")
        return cls(
            family=str(doc["family"]),
            hyperparameters=dict(hp),
            seed=int(doc.get("seed", 0)),
            name=doc.get("name"),
        )


@dataclass
class FittedModel:
    spec: ModelSpec
    model: Model
    feature_names: list[str] | None = None

    @property
    def name(self) -> str:
        return self.spec.display_name

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return predict_proba(self.model, X)


def train_model(
    spec: ModelSpec, X: np.ndarray, y: np.ndarray, feature_names: list[str] | None = None
) -> FittedModel:
    hp = spec.resolved_hyperparameters()
    if spec.family == "logistic":
        model: Model = train_logistic(
            X,
            y,
            l2_lambda=float(hp["l2_lambda"]),
            max_iter=int(hp["max_iter"]),
            tol=float(hp["tol"]),
        )
    elif spec.family == "tree":
        tree = train_tree(
            X,
            y,
            max_depth=int(hp["max_depth"]),
            min_samples_leaf=int(hp["min_samples_leaf"]),
            feature_subsample=hp["feature_subsample"],
            seed=spec.seed,
        )
        model = TreeEnsemble(
            trees=[tree],
            tree_weights=np.ones(1),
            combination="average_probability",
            n_features_in=int(np.asarray(X).shape[1]),
        )
    elif spec.family == "forest":
        model = train_forest(
            X,
            y,
            n_trees=int(hp["n_trees"]),
            max_depth=int(hp["max_depth"]),
            feature_subsample=hp["feature_subsample"],
            min_samples_leaf=int(hp["min_samples_leaf"]),
            bootstrap=bool(hp["bootstrap"]),
            seed=spec.seed,
        )
    elif spec.family == "adaboost":
        model = train_adaboost(X, y, n_rounds=int(hp["n_rounds"]), seed=spec.seed)
    else:
        model = train_gbdt(
            X,
            y,
            n_trees=int(hp["n_trees"]),
            learning_rate=float(hp["learning_rate"]),
            max_depth=int(hp["max_depth"]),
            reg_lambda=float(hp["reg_lambda"]),
            min_child_weight=float(hp["min_child_weight"]),
            subsample=float(hp["subsample"]),
            preset=str(hp["preset"]),
            seed=spec.seed,
        )
    return FittedModel(spec=spec, model=model, feature_names=feature_names)


# ---------------------------------------------------------------------------
# serialization


def model_to_dict(fitted: FittedModel) -> dict:
    model = fitted.model
    if isinstance(model, LinearModel):
        params = {
            "kind": "linear",
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "l2_lambda": model.l2_lambda,
        }
    else:
        params = {
            "kind": "ensemble",
            "combination": model.combination,
            "n_features_in": model.n_features_in,
            "base_score": model.base_score,
            "learning_rate": model.learning_rate,
            "tree_weights": model.tree_weights.tolist(),
            "trees": [tree.to_dict() for tree in model.trees],
        }
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "spec": fitted.spec.to_dict(),
        "feature_names": fitted.feature_names,
        "params": params,
    }


def model_from_dict(doc: dict) -> FittedModel:
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported model schema_version {doc.get('schema_version')!r}"
        )
    spec = ModelSpec.from_dict(doc["spec"])
    params = doc["params"]
    if params["kind"] == "linear":
        model: Model = LinearModel(
            weights=np.asarray(params["weights"], dtype=np.float64),
            bias=float(params["bias"]),
            l2_lambda=float(params["l2_lambda"]),
        )
    elif params["kind"] == "ensemble":
        model = TreeEnsemble(
            trees=[Tree.from_dict(t) for t in params["trees"]],
            tree_weights=np.asarray(params["tree_weights"], dtype=np.float64),
            combination=params["combination"],
            n_features_in=int(params["n_features_in"]),
            base_score=float(params["base_score"]),
            learning_rate=float(params["learning_rate"]),
        )
    else:
        raise SchemaError(f"unknown model kind {params.get('kind')!r}")
    names = doc.get("feature_names")
    return FittedModel(spec=spec, model=model, feature_names=names)
