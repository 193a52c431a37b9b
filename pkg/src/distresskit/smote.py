"""SMOTE synthetic minority oversampling.

New minority rows are linear interpolations x_new = x_i + lam * (x_nn - x_i)
between a minority row and one of its k nearest minority neighbours, with
lam drawn uniformly from [0, 1]. Applied to the training partition only;
the pipeline enforces that the test partition is untouched.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from distresskit.data import TabularDataset
from distresskit.errors import DataError

MINORITY_LABEL = 1


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    target_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k_neighbors < 1:
            raise DataError(f"k_neighbors must be >= 1, got {self.k_neighbors}")
        if not 0.0 < self.target_ratio <= 1.0:
            raise DataError(
                f"target_ratio must be in (0, 1], got {self.target_ratio}"
            )

    def to_dict(self) -> dict:
        return {
            "k_neighbors": self.k_neighbors,
            "target_ratio": self.target_ratio,
            "seed": self.seed,
        }


@dataclass
class SmoteResult:
    """Oversampled training set plus the per-synthetic-row audit trail.

    ``parent_index`` / ``neighbor_index`` are row indices into the original
    training matrix, so the segment property of every synthetic row can be
    re-verified externally from the audit alone.
    """

    dataset: TabularDataset
    parent_index: np.ndarray
    neighbor_index: np.ndarray
    interpolation: np.ndarray
    minority_before: int
    majority_count: int

    @property
    def n_synthetic(self) -> int:
        return int(self.parent_index.size)

    @property
    def minority_after(self) -> int:
        return self.minority_before + self.n_synthetic

    def save_audit_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["parent_index", "neighbor_index", "lambda"])
            for p, q, lam in zip(
                self.parent_index.tolist(),
                self.neighbor_index.tolist(),
                self.interpolation.tolist(),
            ):
                writer.writerow([p, q, repr(lam)])


def minority_knn(train: TabularDataset, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean k nearest minority neighbours of each minority row.

    Returns (minority_rows, neighbors): minority_rows is the ascending
    array of minority row indices, neighbors is (n_minority, k) holding
    global row indices. A point is never its own neighbour; equal
    distances break toward the lower row index.
    """
    if np.isnan(train.values).any():
        raise DataError("minority_knn requires an imputed (no-missing) matrix")
    minority_rows = np.flatnonzero(train.labels == MINORITY_LABEL)
    n_min = minority_rows.size
    if n_min <= k:
        raise DataError(
            f"need more than k={k} minority rows for SMOTE, found {n_min}"
        )
    pts = train.values[minority_rows]
    sq_norms = np.einsum("ij,ij->i", pts, pts)
    sq_dist = sq_norms[:, None] + sq_norms[None, :] - 2.0 * (pts @ pts.T)
    np.fill_diagonal(sq_dist, np.inf)
    # stable sort over ascending-index candidates implements the tie rule
    order = np.argsort(sq_dist, axis=1, kind="stable")[:, :k]
    return minority_rows, minority_rows[order]


def smote(train: TabularDataset, config: SmoteConfig) -> SmoteResult:
    """Oversample the minority class up to target_ratio * majority_count.

    Generates ceil(target_ratio * majority) - minority synthetic rows, all
    labelled 1, cycling through minority rows in ascending index order.
    Each synthetic draw picks one of the parent's k neighbours uniformly,
    then lam ~ Uniform[0, 1]. Original rows are preserved first in their
    original order; synthetics are appended. Deterministic given the seed.

    Raises:
        DataError: target_ratio below the current minority/majority ratio,
            or too few minority rows for k neighbours.
    """
    n_minority = int(np.sum(train.labels == MINORITY_LABEL))
    n_majority = train.n_rows - n_minority
    if n_majority == 0:
        raise DataError("training partition has no majority rows")
    current_ratio = n_minority / n_majority
    if config.target_ratio < current_ratio - 1e-12:
        raise DataError(
            f"target_ratio {config.target_ratio} is below the current "
            f"minority/majority ratio {current_ratio:.6f}"
        )
    # tiny slack keeps ceil() faithful to the exact product under float fuzz
    n_target = math.ceil(config.target_ratio * n_majority - 1e-9)
    n_synthetic = max(0, n_target - n_minority)

    minority_rows, neighbors = minority_knn(train, config.k_neighbors)
    rng = np.random.default_rng(config.seed)

    new_rows = np.empty((n_synthetic, train.n_features), dtype=np.float64)
    parent_out = np.empty(n_synthetic, dtype=np.int64)
    neighbor_out = np.empty(n_synthetic, dtype=np.int64)
    lam_out = np.empty(n_synthetic, dtype=np.float64)
    for s in range(n_synthetic):
        m = s % minority_rows.size
        choice = int(rng.integers(0, config.k_neighbors))
        lam = float(rng.random())
        parent = minority_rows[m]
        neighbor = neighbors[m, choice]
        x_i = train.values[parent]
        x_nn = train.values[neighbor]
        new_rows[s] = x_i + lam * (x_nn - x_i)
        parent_out[s] = parent
        neighbor_out[s] = neighbor
        lam_out[s] = lam

    values = np.vstack([train.values, new_rows])
    labels = np.concatenate(
        [train.labels, np.full(n_synthetic, MINORITY_LABEL, dtype=np.int64)]
    )
    return SmoteResult(
        dataset=TabularDataset(list(train.feature_names), values, labels),
        parent_index=parent_out,
        neighbor_index=neighbor_out,
        interpolation=lam_out,
        minority_before=n_minority,
        majority_count=n_majority,
    )
