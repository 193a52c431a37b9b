"""Train-fitted, leakage-free preprocessing.

Median imputation, standardization (population stddev), correlation-based
feature filtering, and stratified train/test splitting. Every statistic is
computed on the training partition only; ``apply_transform`` replays the
fitted artifacts on any partition without touching its labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from distresskit.data import TabularDataset
from distresskit.errors import DataError, SchemaError

SCHEMA_VERSION = 1


@dataclass
class SplitIndices:
    train: np.ndarray
    test: np.ndarray


@dataclass
class FitArtifacts:
    """Per-feature statistics learned on the training partition.

    ``retained_columns`` masks the original feature order: constant columns
    and the later member of every over-correlated pair are False. A stddev
    of 0 only ever occurs on constant columns, which the mask drops.
    """

    feature_names: list[str]
    medians: np.ndarray
    means: np.ndarray
    stddevs: np.ndarray
    retained_columns: np.ndarray
    correlation_threshold: float | None = None
    split_seed: int = 0

    def __post_init__(self) -> None:
        self.medians = np.asarray(self.medians, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.stddevs = np.asarray(self.stddevs, dtype=np.float64)
        self.retained_columns = np.asarray(self.retained_columns, dtype=bool)
        if not self.retained_columns.any():
            raise DataError("no feature survives filtering")

    @property
    def retained_names(self) -> list[str]:
        return [n for n, keep in zip(self.feature_names, self.retained_columns) if keep]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "feature_names": list(self.feature_names),
            "medians": self.medians.tolist(),
            "means": self.means.tolist(),
            "stddevs": self.stddevs.tolist(),
            "retained_columns": self.retained_columns.astype(int).tolist(),
            "correlation_threshold": self.correlation_threshold,
            "split_seed": self.split_seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FitArtifacts":
        return cls(
            feature_names=list(doc["feature_names"]),
            medians=np.asarray(doc["medians"], dtype=np.float64),
            means=np.asarray(doc["means"], dtype=np.float64),
            stddevs=np.asarray(doc["stddevs"], dtype=np.float64),
            retained_columns=np.asarray(doc["retained_columns"], dtype=bool),
            correlation_threshold=doc.get("correlation_threshold"),
            split_seed=int(doc.get("split_seed", 0)),
        )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(
    dataset: TabularDataset, test_fraction: float, seed: int
) -> SplitIndices:
    """Seeded per-class split preserving the minority proportion.

    Each class is shuffled independently off one seeded stream (class 0
    first) and contributes round(test_fraction * class_count) rows to the
    test partition, ties rounding up. Identical seeds give identical
    indices; both output index lists are sorted ascending.

    Raises:
        DataError: test_fraction outside (0, 1), or a class that would end
            up with zero train or zero test rows.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    train_parts: list[np.ndarray] = []
    test_parts: list[np.ndarray] = []
    for label in (0, 1):
        class_idx = np.flatnonzero(dataset.labels == label)
        n_class = class_idx.size
        n_test = _round_half_up(test_fraction * n_class)
        if n_class < 2 or n_test == 0 or n_test == n_class:
            raise DataError(
                f"class {label} too small to split: {n_class} rows, "
                f"{n_test} would go to test"
            )
        perm = rng.permutation(n_class)
        test_parts.append(class_idx[perm[:n_test]])
        train_parts.append(class_idx[perm[n_test:]])
    return SplitIndices(
        train=np.sort(np.concatenate(train_parts)),
        test=np.sort(np.concatenate(test_parts)),
    )


def _column_medians(values: np.ndarray, feature_names: list[str]) -> np.ndarray:
    all_missing = np.all(np.isnan(values), axis=0)
    if all_missing.any():
        bad = [feature_names[j] for j in np.flatnonzero(all_missing)]
        raise DataError(f"column(s) entirely missing, cannot impute: {bad}")
    return np.nanmedian(values, axis=0)


def _impute(values: np.ndarray, medians: np.ndarray) -> np.ndarray:
    out = values.copy()
    miss = np.isnan(out)
    if miss.any():
        out[miss] = np.broadcast_to(medians, out.shape)[miss]
    return out


def fit_impute_scale(train: TabularDataset) -> FitArtifacts:
    """Learn median fill values and standardization statistics from train.

    Medians use the non-missing values of each column (even count gives
    the mean of the two middle values); means and stddevs are computed
    after imputation with the population (divide-by-n) convention.
    Constant columns get stddev 0 and are flagged out of the retained
    mask. Raises DataError on an empty partition or an all-missing column.
    """
    if train.n_rows == 0:
        raise DataError("cannot fit on an empty training partition")
    medians = _column_medians(train.values, train.feature_names)
    imputed = _impute(train.values, medians)
    means = imputed.mean(axis=0)
    stddevs = imputed.std(axis=0, ddof=0)
    return FitArtifacts(
        feature_names=list(train.feature_names),
        medians=medians,
        means=means,
        stddevs=stddevs,
        retained_columns=stddevs > 0.0,
    )


def correlation_filter(train: TabularDataset, threshold: float) -> np.ndarray:
    """Mask out constant columns and the later member of correlated pairs.

    Pearson correlations are computed on the (already imputed) training
    matrix. Column pairs (i, j) with i < j are scanned in index order;
    whenever |r(i, j)| > threshold and both columns are still retained,
    column j is dropped. The scan order makes the result deterministic
    and idempotent.
    """
    if not 0.0 < threshold <= 1.0:
        raise DataError(f"correlation threshold must be in (0, 1], got {threshold}")
    if np.isnan(train.values).any():
        raise DataError("correlation_filter requires an imputed matrix")
    values = train.values
    n, d = values.shape
    stddevs = values.std(axis=0, ddof=0)
    retained = stddevs > 0.0
    live = np.flatnonzero(retained)
    if live.size >= 2:
        centered = (values[:, live] - values[:, live].mean(axis=0)) / stddevs[live]
        corr = np.clip((centered.T @ centered) / n, -1.0, 1.0)
        for a in range(live.size):
            i = live[a]
            if not retained[i]:
                continue
            for b in range(a + 1, live.size):
                j = live[b]
                if retained[j] and abs(corr[a, b]) > threshold:
                    retained[j] = False
    return retained


def fit_preprocessing(
    train: TabularDataset,
    correlation_threshold: float = 0.95,
    split_seed: int = 0,
) -> FitArtifacts:
    """Full train-side fit: impute, then filter, then scaling statistics."""
    artifacts = fit_impute_scale(train)
    imputed = TabularDataset(
        list(train.feature_names),
        _impute(train.values, artifacts.medians),
        train.labels,
    )
    corr_mask = correlation_filter(imputed, correlation_threshold)
    artifacts.retained_columns = artifacts.retained_columns & corr_mask
    if not artifacts.retained_columns.any():
        raise DataError("no feature survives correlation filtering")
    artifacts.correlation_threshold = correlation_threshold
    artifacts.split_seed = split_seed
    return artifacts


def apply_transform(dataset: TabularDataset, artifacts: FitArtifacts) -> TabularDataset:
    """Impute with train medians, standardize, and drop filtered columns.

    Raises SchemaError when the dataset's column names differ from the
    schema the artifacts were fitted on. Labels pass through untouched.
    """
    if list(dataset.feature_names) != list(artifacts.feature_names):
        raise SchemaError(
            f"dataset columns {dataset.feature_names} do not match "
            f"fitted schema {artifacts.feature_names}"
        )
    imputed = _impute(dataset.values, artifacts.medians)
    keep = artifacts.retained_columns
    scaled = (imputed[:, keep] - artifacts.means[keep]) / artifacts.stddevs[keep]
    return TabularDataset(artifacts.retained_names, scaled, dataset.labels.copy())
