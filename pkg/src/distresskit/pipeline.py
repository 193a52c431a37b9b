"""End-to-end run: load, split, preprocess, SMOTE, train, evaluate, explain.

Produces an auditable output tree:

    report.json            full run report (schema_version, seeds, metrics)
    metrics.csv            Model,Precision,Recall,F1,ROC-AUC (ranked)
    preprocessing.json     imputation/scaling/filter artifacts
    model_<name>.json      every trained model, linked to preprocessing
    smote_audit.csv        parent/neighbor/lambda per synthetic row
    shap_<name>.csv        per-row attributions for the best model
    figures/*.svg          class distribution, ROC overlay, confusion, SHAP

Identical configs give byte-identical outputs (timings are zeroed under
report normalization); every stochastic component's seed is derived from
the master seed and echoed in the report.
"""

from __future__ import annotations

import copy
import hashlib
import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from distresskit import __version__
from distresskit.config import PipelineConfig
from distresskit.data import DatasetSummary, TabularDataset, load_csv, summarize
from distresskit.errors import ConfigError, DistressKitError, StageError
from distresskit.evaluate import (
    ComparisonRow,
    CrossValidationResult,
    cross_validate,
    rank_comparison_rows,
    run_ordered,
    save_metrics_csv,
)
from distresskit.figures import (
    class_distribution_svg,
    confusion_matrix_svg,
    roc_overlay_svg,
    shap_summary_svg,
)
from distresskit.metrics import evaluate_scores, roc_curve_points
from distresskit.models import model_to_dict, train_model
from distresskit.preprocess import (
    SCHEMA_VERSION as PREPROCESS_SCHEMA_VERSION,
    FitArtifacts,
    apply_transform,
    fit_preprocessing,
    stratified_split,
)
from distresskit.seeding import derive_seed
from distresskit.shapley import global_importance, save_shap_csv
from distresskit.smote import smote

REPORT_SCHEMA_VERSION = 1

FIGURE_NAMES = (
    "class_distribution.svg",
    "roc_overlay.svg",
    "confusion_matrix.svg",
    "shap_summary.svg",
)


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def preprocessing_doc(artifacts: FitArtifacts, label_column: str) -> dict:
    return {
        "schema_version": PREPROCESS_SCHEMA_VERSION,
        "label_column": label_column,
        "artifacts": artifacts.to_dict(),
    }


def preprocessing_hash(doc: dict) -> str:
    return hashlib.sha256(canonical_json(doc).encode("utf-8")).hexdigest()


@dataclass
class RunReport:
    config_echo: dict
    seeds: dict
    dataset_summary: DatasetSummary
    preprocessing: dict
    split_info: dict
    smote_info: dict
    model_entries: list[dict]
    ranking: list[str]
    best_model: str
    smote_comparison: dict
    explanation: dict | None
    timings: dict[str, float]
    normalized: bool
    output_dir: Path
    files: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        timings = (
            {name: 0.0 for name in self.timings} if self.normalized else dict(self.timings)
        )
        config_echo = copy.deepcopy(self.config_echo)
        if self.normalized:
            # mask execution-environment fields so reports produced with
            # different thread counts compare byte-for-byte; 0 is not a
            # legal workers value, so the masking is self-announcing
            config_echo["pipeline"]["workers"] = 0
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "tool": {"name": "distresskit", "version": __version__},
            "config": config_echo,
            "seeds": self.seeds,
            "dataset": self.dataset_summary.to_dict(),
            "preprocessing": self.preprocessing,
            "split": self.split_info,
            "smote": self.smote_info,
            "models": self.model_entries,
            "ranking": self.ranking,
            "best_model": self.best_model,
            "smote_comparison": self.smote_comparison,
            "explanation": self.explanation,
            "metric_conventions": {
                "positive_class": 1,
                "zero_denominator": "precision/recall/f1 return 0",
                "auc_ties": "average ranks (half credit)",
            },
            "artifact_schema_versions": {
                "report_json": REPORT_SCHEMA_VERSION,
                "preprocessing_json": PREPROCESS_SCHEMA_VERSION,
                "model_json": 1,
                "metrics_csv": 1,
                "smote_audit_csv": 1,
                "shap_csv": 1,
            },
            "files": list(self.files),
            "timings_seconds": timings,
            "normalized": self.normalized,
        }


@contextmanager
def stage_scope(name: str, timings: dict[str, float]):
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except DistressKitError as exc:
        raise StageError(name, exc) from exc
    finally:
        timings[name] = time.perf_counter() - start


def _sample_background(
    train: TabularDataset, size: int, seed: int
) -> tuple[np.ndarray, int]:
    rng = np.random.default_rng(seed)
    n = train.n_rows
    if n <= size:
        return train.values.copy(), n
    rows = np.sort(rng.choice(n, size=size, replace=False))
    return train.values[rows], size


def run_pipeline(config: PipelineConfig, *, normalize_report: bool = False) -> RunReport:
    if config.input_path is None:
        raise StageError("load", ConfigError("no input dataset configured"))
    out_dir = Path(config.output_dir)
    fig_dir = out_dir / "figures"
    out_dir.mkdir(parents=True, exist_ok=True)
    fig_dir.mkdir(parents=True, exist_ok=True)

    timings: dict[str, float] = {}
    files: list[str] = []
    master = config.master_seed
    seeds = {
        "master": master,
        "derivation": "first 8 bytes of sha256('<master>:<component>:<index>'), shifted right once",
        "split": derive_seed(master, "split", 0),
        "smote": derive_seed(master, "smote", 0),
        "cv": derive_seed(master, "cv", 0),
        "background": derive_seed(master, "background", 0),
    }
    specs = config.resolved_model_specs()
    seeds["models"] = {spec.display_name: spec.seed for spec in specs}

    with stage_scope("load", timings):
        dataset = load_csv(config.input_path, config.label_column)
    with stage_scope("summarize", timings):
        summary = summarize(dataset)

    with stage_scope("split", timings):
        split = stratified_split(dataset, config.test_fraction, seeds["split"])
        train = dataset.take(split.train)
        test = dataset.take(split.test)

    with stage_scope("preprocess", timings):
        artifacts = fit_preprocessing(
            train, config.correlation_threshold, split_seed=seeds["split"]
        )
        train_t = apply_transform(train, artifacts)
        test_t = apply_transform(test, artifacts)
    test_hash_before = test_t.content_hash()

    smote_config = config.smote_config()
    smote_result = None
    with stage_scope("smote", timings):
        if smote_config is not None:
            smote_result = smote(train_t, smote_config)
            train_fit = smote_result.dataset
        else:
            train_fit = train_t
    test_hash_after = test_t.content_hash()

    retained = artifacts.retained_names

    def train_and_score(spec) -> tuple[ComparisonRow, np.ndarray]:
        fitted = train_model(spec, train_fit.values, train_fit.labels, feature_names=retained)
        scores = fitted.predict_proba(test_t.values)
        metrics = evaluate_scores(scores, test_t.labels, config.threshold)
        row = ComparisonRow(
            name=spec.display_name, spec=spec, metrics=metrics, fitted=fitted
        )
        return row, scores

    with stage_scope("train", timings):
        trained = run_ordered(
            [lambda s=s: train_and_score(s) for s in specs], config.workers
        )
    rows = [row for row, _ in trained]
    scores_by_name = {row.name: s for row, s in trained}

    with stage_scope("cross_validation", timings):
        cv_by_name: dict[str, CrossValidationResult] = {}
        cv_jobs = [
            lambda s=s: cross_validate(
                dataset,
                s,
                smote_config,
                k=config.cv_folds,
                seed=seeds["cv"],
                correlation_threshold=config.correlation_threshold,
                threshold=config.threshold,
                workers=1,
            )
            for s in specs
        ]
        for spec, result in zip(specs, run_ordered(cv_jobs, config.workers)):
            cv_by_name[spec.display_name] = result

    with stage_scope("compare", timings):
        ranked = rank_comparison_rows(rows)
        ranking = [row.name for row in ranked]
        best = ranked[0]

    with stage_scope("smote_comparison", timings):
        if smote_result is not None:
            plain = train_model(
                best.spec, train_t.values, train_t.labels, feature_names=retained
            )
            plain_metrics = evaluate_scores(
                plain.predict_proba(test_t.values), test_t.labels, config.threshold
            )
            smote_comparison = {
                "enabled": True,
                "model": best.name,
                "with_smote": best.metrics.to_dict(),
                "without_smote": plain_metrics.to_dict(),
                "recall_delta": best.metrics.recall - plain_metrics.recall,
            }
        else:
            smote_comparison = {
                "enabled": False,
                "note": "smote disabled; no paired comparison",
            }

    explanation_doc = None
    explanations = None
    importance = None
    with stage_scope("explain", timings):
        n_explain = min(config.explain_rows, test_t.n_rows)
        if n_explain > 0:
            background, bg_used = _sample_background(
                train_t, config.background_size, seeds["background"]
            )
            explain_rows_x = test_t.values[:n_explain]
            importance, explanations = global_importance(
                best.fitted.model,
                explain_rows_x,
                background,
                feature_names=retained,
                seed=seeds["background"],
            )
            gaps = [e.local_accuracy_gap() for e in explanations]
            explanation_doc = {
                "model": best.name,
                "output_space": importance.output_space,
                "rows_explained": n_explain,
                "row_indices": [int(i) for i in split.test[:n_explain]],
                "background_size": bg_used,
                "max_local_accuracy_gap": max(gaps),
                "global_importance": importance.to_dict(),
                "csv": f"shap_{best.name}.csv",
            }

    with stage_scope("report", timings):
        preproc_doc = preprocessing_doc(artifacts, config.label_column)
        preproc_hash = preprocessing_hash(preproc_doc)
        _write_text(out_dir / "preprocessing.json", canonical_json(preproc_doc), files, out_dir)

        dropped = [
            name
            for j, name in enumerate(artifacts.feature_names)
            if not artifacts.retained_columns[j]
        ]
        preprocessing_info = {
            "retained_columns": retained,
            "dropped_columns": dropped,
            "medians": _named(artifacts.feature_names, artifacts.medians),
            "means": _named(artifacts.feature_names, artifacts.means),
            "stddevs": _named(artifacts.feature_names, artifacts.stddevs),
            "correlation_threshold": config.correlation_threshold,
            "preprocessing_hash": preproc_hash,
        }
        split_info = {
            "test_fraction": config.test_fraction,
            "train_rows": int(split.train.size),
            "test_rows": int(split.test.size),
            "train_positive": int(np.count_nonzero(train.labels == 1)),
            "test_positive": int(np.count_nonzero(test.labels == 1)),
            "test_hash_before_smote": test_hash_before,
            "test_hash_after_smote": test_hash_after,
        }
        if smote_result is not None:
            smote_info = {
                "enabled": True,
                "k_neighbors": smote_config.k_neighbors,
                "target_ratio": smote_config.target_ratio,
                "seed": smote_config.seed,
                "minority_before": smote_result.minority_before,
                "minority_after": smote_result.minority_after,
                "majority": smote_result.majority_count,
                "n_synthetic": smote_result.n_synthetic,
                "audit_csv": "smote_audit.csv",
            }
            smote_result.save_audit_csv(out_dir / "smote_audit.csv")
            files.append("smote_audit.csv")
        else:
            smote_info = {"enabled": False}

        model_entries = []
        for row in ranked:
            artifact_name = f"model_{row.name}.json"
            doc = model_to_dict(row.fitted)
            doc["preprocessing_hash"] = preproc_hash
            _write_text(out_dir / artifact_name, canonical_json(doc), files, out_dir)
            model_entries.append(
                {
                    "name": row.name,
                    "family": row.spec.family,
                    "seed": row.spec.seed,
                    "hyperparameters": row.spec.resolved_hyperparameters(),
                    "holdout": row.metrics.to_dict(),
                    "cv": cv_by_name[row.name].to_dict(),
                    "artifact": artifact_name,
                }
            )

        save_metrics_csv(ranked, out_dir / "metrics.csv")
        files.append("metrics.csv")

        if explanations is not None:
            shap_name = f"shap_{best.name}.csv"
            save_shap_csv(
                explanations,
                [int(i) for i in split.test[:len(explanations)]],
                retained,
                out_dir / shap_name,
            )
            files.append(shap_name)

    with stage_scope("figures", timings):
        n_train_pos = int(np.count_nonzero(train_t.labels == 1))
        n_train_neg = train_t.n_rows - n_train_pos
        if smote_result is not None:
            after = (
                smote_result.majority_count,
                smote_result.minority_after,
            )
        else:
            after = (n_train_neg, n_train_pos)
        _write_text(
            fig_dir / "class_distribution.svg",
            class_distribution_svg((n_train_neg, n_train_pos), after),
            files,
            out_dir,
        )
        curves = []
        for row in ranked:
            fpr, tpr = roc_curve_points(scores_by_name[row.name], test_t.labels)
            curves.append((row.name, fpr, tpr, row.metrics.roc_auc))
        _write_text(fig_dir / "roc_overlay.svg", roc_overlay_svg(curves), files, out_dir)
        _write_text(
            fig_dir / "confusion_matrix.svg",
            confusion_matrix_svg(best.metrics.confusion, best.name, config.threshold),
            files,
            out_dir,
        )
        if importance is not None:
            _write_text(
                fig_dir / "shap_summary.svg",
                shap_summary_svg(
                    importance.ranked_names(),
                    [float(importance.importances[j]) for j in importance.ranking],
                    importance.output_space,
                ),
                files,
                out_dir,
            )

    report = RunReport(
        config_echo=config.to_echo_dict(),
        seeds=seeds,
        dataset_summary=summary,
        preprocessing=preprocessing_info,
        split_info=split_info,
        smote_info=smote_info,
        model_entries=model_entries,
        ranking=ranking,
        best_model=best.name,
        smote_comparison=smote_comparison,
        explanation=explanation_doc,
        timings=timings,
        normalized=normalize_report,
        output_dir=out_dir,
    )
    report.files = sorted(set(files) | {"report.json"})
    (out_dir / "report.json").write_text(canonical_json(report.to_dict()))
    return report


def _named(names: list[str], values: np.ndarray) -> dict[str, float]:
    return {name: float(values[j]) for j, name in enumerate(names)}


def _write_text(path: Path, text: str, files: list[str], out_dir: Path) -> None:
    path.write_text(text)
    files.append(str(path.relative_to(out_dir)))
