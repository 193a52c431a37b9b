"""Stratified cross-validation and model comparison with leakage-free folds.

Every fold (and the comparison holdout) refits imputation, scaling, and
the correlation filter on its own training rows; SMOTE, when enabled,
touches training rows only.  Comparison rows are ranked by minority
recall, ties broken by ROC-AUC.
"""

from __future__ import annotations

import csv
import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from distresskit.data import TabularDataset
from distresskit.errors import ConfigError, DataError
from distresskit.metrics import MetricsReport, evaluate_scores
from distresskit.models import FittedModel, ModelSpec, train_model
from distresskit.preprocess import (
    FitArtifacts,
    SplitIndices,
    apply_transform,
    fit_preprocessing,
    stratified_split,
)
from distresskit.seeding import derive_seed
from distresskit.smote import SmoteConfig, SmoteResult, smote

METRIC_KEYS = ("precision", "recall", "f1", "roc_auc")
METRICS_CSV_HEADER = ["Model", "Precision", "Recall", "F1", "ROC-AUC"]


def stratified_kfold(labels, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """k disjoint, label-stratified folds of row indices.

    Per class: seeded shuffle, then round-robin assignment (position i
    goes to fold i mod k), so per-fold class counts differ by at most 1.
    """
    labels = np.asarray(getattr(labels, "labels", labels))
    if k < 2:
        raise ConfigError(f"k must be at least 2, got {k}")
    n_minority = int(np.count_nonzero(labels == 1))
    if n_minority < k:
        raise DataError(
            f"minority class smaller than k: {n_minority} positives < {k} folds"
        )
    rng = np.random.default_rng(derive_seed(seed, "kfold", 0))
    folds: list[list[int]] = [[] for _ in range(k)]
    for label in (0, 1):
        idx = np.flatnonzero(labels == label)
        perm = idx[rng.permutation(idx.size)]
        for i, row in enumerate(perm):
            folds[i % k].append(int(row))
    return [np.asarray(sorted(f), dtype=np.int64) for f in folds]


def run_ordered(jobs: Sequence[Callable[[], object]], workers: int) -> list:
    """Run jobs, optionally on a thread pool; results keep submission order."""
    if workers <= 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


@dataclass
class CrossValidationResult:
    k: int
    seed: int
    folds: list[MetricsReport]
    mean: dict[str, float]
    stddev: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "folds": [r.to_dict() for r in self.folds],
            "mean": dict(self.mean),
            "stddev": dict(self.stddev),
        }


def cross_validate(
    dataset: TabularDataset,
    spec: ModelSpec,
    smote_config: SmoteConfig | None = None,
    k: int = 5,
    seed: int = 0,
    *,
    correlation_threshold: float = 0.95,
    threshold: float = 0.5,
    workers: int = 1,
) -> CrossValidationResult:
    """Per-fold leakage-free train/evaluate; mean and population stddev."""
    folds = stratified_kfold(dataset.labels, k, seed)
    fold_seed = derive_seed(seed, "kfold", 0)

    def fold_job(f: int) -> MetricsReport:
        test_idx = folds[f]
        train_idx = np.sort(
            np.concatenate([folds[j] for j in range(k) if j != f])
        )
        train = dataset.take(train_idx)
        test = dataset.take(test_idx)
        artifacts = fit_preprocessing(
            train, correlation_threshold, split_seed=fold_seed
        )
        train_t = apply_transform(train, artifacts)
        test_t = apply_transform(test, artifacts)
        if smote_config is not None:
            per_fold = dataclasses.replace(
                smote_config, seed=derive_seed(smote_config.seed, "cv-smote", f)
            )
            train_t = smote(train_t, per_fold).dataset
        fitted = train_model(
            spec, train_t.values, train_t.labels, feature_names=artifacts.retained_names
        )
        scores = fitted.predict_proba(test_t.values)
        return evaluate_scores(scores, test_t.labels, threshold)

    reports = run_ordered([lambda f=f: fold_job(f) for f in range(k)], workers)
    mean = {
        key: float(np.mean([getattr(r, key) for r in reports])) for key in METRIC_KEYS
    }
    stddev = {
        key: float(np.std([getattr(r, key) for r in reports])) for key in METRIC_KEYS
    }
    return CrossValidationResult(k=k, seed=seed, folds=reports, mean=mean, stddev=stddev)


@dataclass
class ComparisonRow:
    name: str
    spec: ModelSpec
    metrics: MetricsReport
    fitted: FittedModel

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "spec": self.spec.to_dict(),
            "metrics": self.metrics.to_dict(),
        }


@dataclass
class ComparisonResult:
    """Ranked rows plus the shared data conditions they were produced under."""

    rows: list[ComparisonRow]
    split: SplitIndices
    artifacts: FitArtifacts
    train_transformed: TabularDataset
    test_transformed: TabularDataset
    train_fitted: TabularDataset
    smote_result: SmoteResult | None

    def row_named(self, name: str) -> ComparisonRow:
        for row in self.rows:
            if row.name == name:
                return row
        raise KeyError(name)


def rank_comparison_rows(rows: Sequence["ComparisonRow"]) -> list["ComparisonRow"]:
    """Best first: recall, then ROC-AUC; stable for remaining ties."""
    return sorted(rows, key=lambda r: (-r.metrics.recall, -r.metrics.roc_auc))


def compare_models(
    dataset: TabularDataset,
    specs: Sequence[ModelSpec],
    smote_config: SmoteConfig | None = None,
    *,
    seed: int = 0,
    test_fraction: float = 0.2,
    correlation_threshold: float = 0.95,
    threshold: float = 0.5,
    workers: int = 1,
) -> ComparisonResult:
    """Train every spec under identical split/preprocess/SMOTE conditions.

    Rows come back sorted best-first by recall, then ROC-AUC; remaining
    ties keep the caller's spec order (stable sort).
    """
    if not specs:
        raise ConfigError("compare_models requires at least one model spec")
    split = stratified_split(dataset, test_fraction, derive_seed(seed, "split", 0))
    train = dataset.take(split.train)
    test = dataset.take(split.test)
    artifacts = fit_preprocessing(
        train, correlation_threshold, split_seed=derive_seed(seed, "split", 0)
    )
    train_t = apply_transform(train, artifacts)
    test_t = apply_transform(test, artifacts)
    smote_result = smote(train_t, smote_config) if smote_config is not None else None
    train_fit = smote_result.dataset if smote_result is not None else train_t

    def train_job(spec: ModelSpec) -> ComparisonRow:
        fitted = train_model(
            spec, train_fit.values, train_fit.labels, feature_names=artifacts.retained_names
        )
        scores = fitted.predict_proba(test_t.values)
        metrics = evaluate_scores(scores, test_t.labels, threshold)
        return ComparisonRow(
            name=spec.display_name, spec=spec, metrics=metrics, fitted=fitted
        )

    rows = run_ordered([lambda s=s: train_job(s) for s in specs], workers)
    rows = rank_comparison_rows(rows)
    return ComparisonResult(
        rows=rows,
        split=split,
        artifacts=artifacts,
        train_transformed=train_t,
        test_transformed=test_t,
        train_fitted=train_fit,
        smote_result=smote_result,
    )


def save_metrics_csv(rows: Sequence[ComparisonRow], path: str | Path) -> None:
    """Table-style CSV mirror of a comparison (best row first)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_CSV_HEADER)
        for row in rows:
            m = row.metrics
            writer.writerow(
                [
                    row.name,
                    f"{m.precision:.6f}",
                    f"{m.recall:.6f}",
                    f"{m.f1:.6f}",
                    f"{m.roc_auc:.6f}",
                ]
            )
