"""Imbalance-aware financial distress prediction toolkit.

End-to-end workflow for severely imbalanced binary tabular classification:
CSV ingest, leakage-free preprocessing, SMOTE oversampling of the training
partition, an in-house model engine (logistic regression, CART, random
forest, AdaBoost, Newton-step gradient boosting), minority-class-focused
evaluation, Shapley feature attribution, and a deterministic seeded CLI
that emits auditable JSON/CSV/SVG reports.
"""

__version__ = "0.1.0"

from distresskit.config import PipelineConfig, load_config, parse_config
from distresskit.data import TabularDataset, DatasetSummary, load_csv, save_csv, summarize
from distresskit.errors import (
    ConfigError,
    DataError,
    DistressKitError,
    FitError,
    SchemaError,
    StageError,
)
from distresskit.evaluate import (
    ComparisonResult,
    ComparisonRow,
    CrossValidationResult,
    compare_models,
    cross_validate,
    rank_comparison_rows,
    save_metrics_csv,
    stratified_kfold,
)
from distresskit.metrics import (
    ConfusionMatrix,
    MetricsReport,
    confusion_at_threshold,
    evaluate_scores,
    precision_recall_f1,
    roc_auc,
    roc_curve_points,
)
from distresskit.models import (
    FittedModel,
    LinearModel,
    ModelSpec,
    TreeEnsemble,
    model_from_dict,
    model_to_dict,
    predict_proba,
    train_model,
)
from distresskit.pipeline import RunReport, run_pipeline
from distresskit.preprocess import (
    FitArtifacts,
    SplitIndices,
    apply_transform,
    fit_preprocessing,
    stratified_split,
)
from distresskit.seeding import derive_seed, rng_for
from distresskit.shapley import (
    GlobalImportance,
    ShapExplanation,
    TreeShapExplainer,
    exact_shapley,
    explain_row,
    global_importance,
    sampled_shapley,
    tree_shap,
)
from distresskit.smote import SmoteConfig, SmoteResult, smote
from distresskit.trees import Tree, grow_classification_tree, grow_newton_tree

__all__ = [
    "__version__",
    # data
    "TabularDataset",
    "DatasetSummary",
    "load_csv",
    "save_csv",
    "summarize",
    # errors
    "DistressKitError",
    "DataError",
    "SchemaError",
    "ConfigError",
    "FitError",
    "StageError",
    # seeding
    "derive_seed",
    "rng_for",
    # preprocess
    "SplitIndices",
    "FitArtifacts",
    "stratified_split",
    "fit_preprocessing",
    "apply_transform",
    # smote
    "SmoteConfig",
    "SmoteResult",
    "smote",
    # trees / models
    "Tree",
    "grow_classification_tree",
    "grow_newton_tree",
    "ModelSpec",
    "FittedModel",
    "LinearModel",
    "TreeEnsemble",
    "train_model",
    "predict_proba",
    "model_to_dict",
    "model_from_dict",
    # metrics / evaluate
    "ConfusionMatrix",
    "MetricsReport",
    "confusion_at_threshold",
    "precision_recall_f1",
    "roc_auc",
    "roc_curve_points",
    "evaluate_scores",
    "stratified_kfold",
    "cross_validate",
    "CrossValidationResult",
    "compare_models",
    "ComparisonRow",
    "ComparisonResult",
    "rank_comparison_rows",
    "save_metrics_csv",
    # shapley
    "ShapExplanation",
    "exact_shapley",
    "sampled_shapley",
    "tree_shap",
    "TreeShapExplainer",
    "explain_row",
    "GlobalImportance",
    "global_importance",
    # config / pipeline
    "PipelineConfig",
    "parse_config",
    "load_config",
    "RunReport",
    "run_pipeline",
]
