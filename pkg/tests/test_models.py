"""Model engine checks: optimization correctness, the pinned closed-form
examples, determinism, and artifact round trips.

The logistic gradient is validated against central finite differences of
the objective — the classic oracle for hand-rolled optimizers.  GBDT leaf
weights and the AdaBoost α schedule are recomputed from first principles.
"""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from distresskit.errors import ConfigError, FitError, SchemaError
from distresskit.models import (
    ALLOWED_HYPERPARAMETERS,
    FAMILY_DEFAULTS,
    GBDT_PRESETS,
    LinearModel,
    ModelSpec,
    TreeEnsemble,
    logistic_gradient,
    logistic_objective,
    model_from_dict,
    model_to_dict,
    predict_proba,
    resolve_gbdt_params,
    sigmoid,
    train_adaboost,
    train_forest,
    train_gbdt,
    train_logistic,
    train_model,
    train_tree,
)
from distresskit.synthetic import make_linear_dataset, make_ring_dataset


def _separable_1d():
    X = np.array([[-1.0], [-1.0], [1.0], [1.0]])
    y = np.array([0, 0, 1, 1])
    return X, y


class TestLogistic:
    def test_zero_parameters_predict_half(self):
        m = LinearModel(weights=np.zeros(3), bias=0.0, l2_lambda=0.0)
        np.testing.assert_array_equal(
            predict_proba(m, np.random.default_rng(0).normal(size=(5, 3))),
            np.full(5, 0.5),
        )

    def test_separable_weight_positive(self):
        X, y = _separable_1d()
        m = train_logistic(X, y, l2_lambda=0.1)
        assert m.weights[0] > 0

    @pytest.mark.parametrize("point", range(10))
    def test_gradient_matches_central_differences(self, point):
        """Relative error < 1e-6 at 10 random parameter points."""
        rng = np.random.default_rng(point)
        n, d = 40, 4
        X = rng.normal(size=(n, d))
        y = rng.integers(0, 2, size=n).astype(np.float64)
        y[:2] = [0, 1]
        w = rng.normal(scale=0.8, size=d)
        b = float(rng.normal())
        lam = float(rng.uniform(0.0, 0.5))

        grad_w, grad_b = logistic_gradient(w, b, X, y, lam)

        eps = 1e-6

        def f(wv, bv):
            return logistic_objective(
                LinearModel(weights=wv, bias=bv, l2_lambda=lam), X, y
            )

        fd_w = np.empty(d)
        for j in range(d):
            e = np.zeros(d)
            e[j] = eps
            fd_w[j] = (f(w + e, b) - f(w - e, b)) / (2 * eps)
        fd_b = (f(w, b + eps) - f(w, b - eps)) / (2 * eps)

        scale = max(1.0, float(np.max(np.abs(fd_w))), abs(fd_b))
        assert np.max(np.abs(grad_w - fd_w)) / scale < 1e-6
        assert abs(grad_b - fd_b) / scale < 1e-6

    def test_training_reduces_objective(self):
        ds = make_linear_dataset(n_rows=300, n_features=5, seed=3)
        X, y = ds.values, ds.labels
        m = train_logistic(X, y, l2_lambda=1e-3)
        start = logistic_objective(
            LinearModel(weights=np.zeros(5), bias=0.0, l2_lambda=1e-3), X, y
        )
        assert logistic_objective(m, X, y) < start

    def test_converged_gradient_is_small(self):
        ds = make_linear_dataset(n_rows=200, n_features=3, seed=9)
        m = train_logistic(ds.values, ds.labels, l2_lambda=0.01, max_iter=5000, tol=1e-8)
        gw, gb = logistic_gradient(m.weights, m.bias, ds.values, ds.labels, 0.01)
        assert max(float(np.max(np.abs(gw))), abs(gb)) < 1e-6

    def test_single_class_rejected(self):
        X = np.zeros((4, 2))
        with pytest.raises(FitError):
            train_logistic(X, np.zeros(4))

    def test_stronger_l2_shrinks_weights(self):
        X, y = _separable_1d()
        weak = train_logistic(X, y, l2_lambda=1e-4)
        strong = train_logistic(X, y, l2_lambda=10.0)
        assert abs(strong.weights[0]) < abs(weak.weights[0])


class TestTrainTree:
    def test_gini_mode_one_dimensional_fixture(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        t = train_tree(X, np.array([0, 0, 1, 1]))
        assert t.threshold[0] == 2.5

    def test_newton_mode_requires_hessians(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        g = np.array([0.5, 0.5, -0.5, -0.5])
        with pytest.raises(ConfigError):
            train_tree(X, g, split_criterion="newton")

    def test_newton_mode_leaf_weights(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        g = np.array([0.5, 0.5, -0.5, -0.5])
        h = np.array([0.25, 0.25, 0.25, 0.25])
        t = train_tree(
            X, g, split_criterion="newton", hessians=h, reg_lambda=1.0, max_depth=1
        )
        left = t.value[t.left[0]]
        assert left == pytest.approx(-1.0 / 1.5)

    def test_unknown_criterion(self):
        X, y = _separable_1d()
        with pytest.raises(ConfigError):
            train_tree(X, y, split_criterion="entropy")


class TestForest:
    def test_degenerate_forest_equals_single_tree(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(60, 4))
        y = (X[:, 0] + X[:, 1] > 0).astype(np.int64)
        forest = train_forest(
            X, y, n_trees=1, bootstrap=False, feature_subsample="all",
            max_depth=4, min_samples_leaf=1, seed=3,
        )
        tree = train_tree(X, y, max_depth=4)
        np.testing.assert_array_equal(
            predict_proba(forest, X), predict_proba(tree, X)
        )

    def test_predictions_in_unit_interval(self, ring_small):
        X = np.nan_to_num(ring_small.values)
        p = predict_proba(
            train_forest(X, ring_small.labels, n_trees=10, max_depth=5, seed=0), X
        )
        assert ((p >= 0.0) & (p <= 1.0)).all()

    def test_same_seed_bit_identical(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(100, 5))
        y = rng.integers(0, 2, size=100)
        y[:2] = [0, 1]
        a = train_forest(X, y, n_trees=8, max_depth=4, seed=7)
        b = train_forest(X, y, n_trees=8, max_depth=4, seed=7)
        for ta, tb in zip(a.trees, b.trees):
            assert ta.to_dict() == tb.to_dict()
        c = train_forest(X, y, n_trees=8, max_depth=4, seed=8)
        assert any(ta.to_dict() != tc.to_dict() for ta, tc in zip(a.trees, c.trees))

    def test_bootstrap_diversifies_trees(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(80, 4))
        y = rng.integers(0, 2, size=80)
        y[:2] = [0, 1]
        f = train_forest(X, y, n_trees=5, max_depth=3, feature_subsample="all", seed=1)
        dicts = [json.dumps(t.to_dict()) for t in f.trees]
        assert len(set(dicts)) > 1

    def test_single_class_rejected(self):
        with pytest.raises(FitError):
            train_forest(np.zeros((5, 2)), np.ones(5), n_trees=2)


class TestAdaboost:
    def test_alpha_formula_pinned_value(self):
        assert 0.5 * math.log((1 - 0.1) / 0.1) == pytest.approx(1.09861, abs=1e-5)

    def test_alpha_on_constructed_error(self):
        """First-round ε is exactly 0.1 by construction: 10 equal-weight
        rows, best stump misclassifies exactly one."""
        X = np.array([[i] for i in range(10)], dtype=np.float64)
        y = np.array([0, 0, 0, 0, 0, 1, 0, 1, 1, 1])  # one 0 amid the 1s
        model = train_adaboost(X, y, n_rounds=1)
        assert len(model.trees) == 1
        assert model.tree_weights[0] == pytest.approx(0.5 * math.log(9.0), abs=1e-12)

    def test_useless_data_halts_without_stumps(self):
        # identical x for both classes → every stump is a coin flip (ε ≥ 0.5)
        X = np.zeros((10, 1))
        y = np.array([0, 1] * 5)
        model = train_adaboost(X, y, n_rounds=25)
        assert len(model.trees) == 0
        np.testing.assert_array_equal(predict_proba(model, X), np.full(10, 0.5))

    def test_perfect_stump_stops_after_one_round(self):
        X, y = _separable_1d()
        model = train_adaboost(X, y, n_rounds=50)
        assert len(model.trees) == 1  # ε = 0 on round one

    def test_separable_training_error_reaches_zero(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(50, 3))
        y = (X[:, 1] > 0.2).astype(np.int64)
        model = train_adaboost(X, y, n_rounds=30)
        pred = (predict_proba(model, X) >= 0.5).astype(np.int64)
        assert np.array_equal(pred, y)

    def test_probability_is_sigmoid_of_twice_score(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(40, 3))
        y = (X[:, 0] - 0.3 * X[:, 2] > 0).astype(np.int64)
        model = train_adaboost(X, y, n_rounds=10)
        score = model.margin(X)
        np.testing.assert_allclose(predict_proba(model, X), sigmoid(2 * score))

    def test_weight_update_matches_hand_computation(self):
        """Round-2 stump must be grown against weights renormalized by
        w·exp(−α·y·h) — recomputed here by hand from the round-1 stump."""
        rng = np.random.default_rng(0)
        X = rng.normal(size=(30, 2))
        y = ((X[:, 0] + 1.2 * rng.normal(size=30)) > 0).astype(np.int64)
        two = train_adaboost(X, y, n_rounds=2)
        assert len(two.trees) == 2  # noisy labels: no single stump suffices
        stump1 = two.trees[0]
        alpha1 = two.tree_weights[0]
        y_pm = 2.0 * y - 1.0
        h1 = np.where(stump1.predict(X) >= 0.5, 1.0, -1.0)
        w = np.full(30, 1 / 30) * np.exp(-alpha1 * y_pm * h1)
        w /= w.sum()
        from distresskit.trees import grow_classification_tree

        expected = grow_classification_tree(
            X, y, sample_weight=w, max_depth=1, min_samples_leaf=1
        )
        assert expected.to_dict() == two.trees[1].to_dict()


class TestGbdt:
    def test_base_score_is_log_odds(self):
        X = np.zeros((16, 2))
        y = np.array([1] * 4 + [0] * 12)
        model = train_gbdt(X + np.random.default_rng(0).normal(size=(16, 2)), y, n_trees=0)
        assert model.base_score == pytest.approx(math.log(1 / 3), abs=1e-12)
        assert model.base_score == pytest.approx(-1.09861, abs=1e-5)

    def test_empty_ensemble_predicts_base_rate(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(20, 3))
        y = np.array([1] * 5 + [0] * 15)
        model = train_gbdt(X, y, n_trees=0)
        np.testing.assert_allclose(predict_proba(model, X), np.full(20, 0.25))

    def test_two_tree_hand_routed_oracle(self):
        """predict equals sigmoid(base + lr·Σ leaf values along the routed
        path), with routing done by an independent walker."""
        rng = np.random.default_rng(2)
        X = rng.normal(size=(60, 3))
        y = (X[:, 0] > 0.1).astype(np.int64)
        model = train_gbdt(X, y, n_trees=2, max_depth=2, learning_rate=0.3)

        def walk(tree, x):
            i = 0
            while tree.feature[i] >= 0:
                i = tree.left[i] if x[tree.feature[i]] <= tree.threshold[i] else tree.right[i]
            return tree.value[i]

        for row in range(10):
            margin = model.base_score + 0.3 * sum(
                walk(t, X[row]) for t in model.trees
            )
            assert predict_proba(model, X[row : row + 1])[0] == pytest.approx(
                float(sigmoid(np.array([margin]))[0]), abs=1e-12
            )

    def test_first_tree_leaves_match_gh_oracle(self):
        """All round-1 leaf values equal −G/(H+λ) where G, H are sums of
        p−y and p(1−p) at the base score over routed rows."""
        rng = np.random.default_rng(3)
        X = rng.normal(size=(50, 2))
        y = (X[:, 0] + 0.3 * X[:, 1] > 0).astype(np.int64)
        lam = 1.0
        model = train_gbdt(X, y, n_trees=1, max_depth=2, reg_lambda=lam)
        p0 = float(y.mean())
        g = p0 - y
        h = np.full(50, p0 * (1 - p0))
        tree = model.trees[0]
        leaf_of = tree.apply(X)
        for leaf in np.unique(leaf_of):
            rows = leaf_of == leaf
            assert tree.value[leaf] == pytest.approx(
                -g[rows].sum() / (h[rows].sum() + lam), abs=1e-10
            )

    def test_training_loss_monotone_nonincreasing(self):
        ds = make_ring_dataset(n_rows=600, minority_fraction=0.1, n_features=5, seed=4)
        X, y = ds.values, ds.labels
        model = train_gbdt(X, y, n_trees=60, seed=0)
        margin = np.full(X.shape[0], model.base_score)

        def logloss(m):
            p = sigmoid(m)
            return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))

        prev = logloss(margin)
        for tree in model.trees:
            margin = margin + model.learning_rate * tree.predict(X)
            cur = logloss(margin)
            assert cur <= prev + 1e-12
            prev = cur

    def test_boosting_probabilities_strictly_inside_unit_interval(self):
        ds = make_ring_dataset(n_rows=400, minority_fraction=0.1, n_features=4, seed=5)
        model = train_gbdt(ds.values, ds.labels, n_trees=30, seed=1)
        p = predict_proba(model, ds.values)
        assert (p > 0.0).all() and (p < 1.0).all()

    def test_subsample_deterministic_and_distinct(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(120, 4))
        y = rng.integers(0, 2, size=120)
        y[:2] = [0, 1]
        a = train_gbdt(X, y, n_trees=5, subsample=0.6, seed=3)
        b = train_gbdt(X, y, n_trees=5, subsample=0.6, seed=3)
        assert [t.to_dict() for t in a.trees] == [t.to_dict() for t in b.trees]
        c = train_gbdt(X, y, n_trees=5, subsample=0.6, seed=4)
        assert [t.to_dict() for t in a.trees] != [t.to_dict() for t in c.trees]

    def test_presets_differ_only_in_defaults(self):
        assert set(GBDT_PRESETS) == {"xgboost", "catboost", "lightgbm"}
        assert resolve_gbdt_params({"preset": "catboost"})["reg_lambda"] == 3.0
        assert resolve_gbdt_params({"preset": "lightgbm"})["max_depth"] == 5
        # explicit values override the preset defaults
        merged = resolve_gbdt_params({"preset": "catboost", "reg_lambda": 9.0})
        assert merged["reg_lambda"] == 9.0
        with pytest.raises(ConfigError):
            resolve_gbdt_params({"preset": "histboost"})


class TestModelSpec:
    def test_unknown_hyperparameter_rejected(self):
        with pytest.raises(ConfigError, match="n_estimators"):
            ModelSpec(family="forest", hyperparameters={"n_estimators": 10})

    def test_unknown_family_rejected(self):
        with pytest.raises(ConfigError):
            ModelSpec(family="svm", hyperparameters={})

    def test_unknown_preset_rejected(self):
        with pytest.raises(ConfigError):
            ModelSpec(family="gbdt", hyperparameters={"preset": "nope"})

    def test_display_name_precedence(self):
        assert ModelSpec(family="gbdt", hyperparameters={"preset": "catboost"}).display_name == "catboost"
        assert ModelSpec(family="gbdt", hyperparameters={}).display_name == "xgboost"
        assert ModelSpec(family="forest", hyperparameters={}).display_name == "forest"
        named = ModelSpec(family="forest", hyperparameters={}, name="rf_big")
        assert named.display_name == "rf_big"

    def test_resolved_hyperparameters_fill_defaults(self):
        spec = ModelSpec(family="forest", hyperparameters={"n_trees": 10})
        resolved = spec.resolved_hyperparameters()
        assert resolved["n_trees"] == 10
        assert resolved["max_depth"] == FAMILY_DEFAULTS["forest"]["max_depth"]

    def test_dict_round_trip(self):
        spec = ModelSpec(
            family="gbdt",
            hyperparameters={"preset": "lightgbm", "n_trees": 25},
            seed=99,
            name="lgbm",
        )
        assert ModelSpec.from_dict(spec.to_dict()) == spec

    def test_from_dict_rejects_stray_keys(self):
        with pytest.raises(ConfigError):
            ModelSpec.from_dict({"family": "logistic", "hyperparameters": {}, "zzz": 1})

    def test_allowed_tables_cover_all_families(self):
        assert set(ALLOWED_HYPERPARAMETERS) == set(FAMILY_DEFAULTS)


class TestSerialization:
    @pytest.mark.parametrize(
        "family,hp",
        [
            ("logistic", {}),
            ("tree", {"max_depth": 3}),
            ("forest", {"n_trees": 5, "max_depth": 4}),
            ("adaboost", {"n_rounds": 6}),
            ("gbdt", {"n_trees": 5, "max_depth": 3}),
        ],
    )
    def test_json_round_trip_preserves_predictions(self, family, hp, ring_small):
        X = np.nan_to_num(ring_small.values)[:200]
        y = ring_small.labels[:200]
        spec = ModelSpec(family=family, hyperparameters=hp, seed=11)
        fitted = train_model(spec, X, y, ring_small.feature_names)
        doc = model_to_dict(fitted)
        # the artifact must survive an actual serialize → parse cycle
        back = model_from_dict(json.loads(json.dumps(doc)))
        np.testing.assert_array_equal(
            fitted.predict_proba(X), back.predict_proba(X)
        )
        assert back.spec == spec
        assert back.feature_names == fitted.feature_names

    def test_same_spec_same_bytes(self, ring_small):
        X = np.nan_to_num(ring_small.values)[:150]
        y = ring_small.labels[:150]
        spec = ModelSpec(family="forest", hyperparameters={"n_trees": 4}, seed=2)
        a = json.dumps(model_to_dict(train_model(spec, X, y, ring_small.feature_names)), sort_keys=True)
        b = json.dumps(model_to_dict(train_model(spec, X, y, ring_small.feature_names)), sort_keys=True)
        assert a == b

    def test_schema_version_present(self, ring_small):
        X = np.nan_to_num(ring_small.values)[:80]
        spec = ModelSpec(family="logistic", hyperparameters={})
        doc = model_to_dict(train_model(spec, X, ring_small.labels[:80], ring_small.feature_names))
        assert doc["schema_version"] == 1


class TestPredictProba:
    def test_wrong_width_rejected(self):
        m = LinearModel(weights=np.zeros(3), bias=0.0, l2_lambda=0.0)
        with pytest.raises(SchemaError):
            predict_proba(m, np.zeros((2, 4)))

    def test_one_dimensional_rejected(self):
        m = LinearModel(weights=np.zeros(3), bias=0.0, l2_lambda=0.0)
        with pytest.raises(SchemaError):
            predict_proba(m, np.zeros(3))

    def test_non_finite_output_rejected(self):
        m = LinearModel(weights=np.array([np.inf]), bias=0.0, l2_lambda=0.0)
        with pytest.raises(FitError):
            predict_proba(m, np.array([[np.nan]]))

    def test_constant_leaf_forest(self):
        from distresskit.trees import Tree

        leaf = Tree(
            feature=np.array([-1], dtype=np.int32),
            threshold=np.zeros(1),
            left=np.array([-1], dtype=np.int32),
            right=np.array([-1], dtype=np.int32),
            value=np.array([0.3]),
        )
        ens = TreeEnsemble(
            trees=[leaf, leaf, leaf],
            tree_weights=np.ones(3),
            combination="average_probability",
            n_features_in=2,
        )
        np.testing.assert_allclose(predict_proba(ens, np.zeros((4, 2))), 0.3)
