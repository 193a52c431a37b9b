"""CSV ingest and the in-memory tabular representation.

Datasets are dense float64 matrices with ``nan`` as the explicit missing
marker, an ordered feature-name list, and a binary label vector where
1 marks the bankrupt/distressed (minority, positive) class.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from distresskit.errors import DataError

DEFAULT_MISSING_TOKENS = ("", "na", "nan")
DEFAULT_LABEL_ALIASES = {"0": 0, "1": 1, "false": 0, "true": 1}


@dataclass
class TabularDataset:
    """Feature matrix with named columns, nan-coded missing cells, 0/1 labels.

    Column order is load order and every downstream feature index refers
    to it. ``labels`` uses 1 for the minority/positive (distressed) class.
    """

    feature_names: list[str]
    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DataError(f"values must be 2-D, got ndim={self.values.ndim}")
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.shape != (self.values.shape[0],):
            raise DataError(
                f"labels length {self.labels.shape} does not match "
                f"{self.values.shape[0]} rows"
            )
        if len(self.feature_names) != self.values.shape[1]:
            raise DataError(
                f"{len(self.feature_names)} feature names for "
                f"{self.values.shape[1]} columns"
            )
        bad = set(np.unique(self.labels)) - {0, 1}
        if bad:
            raise DataError(f"labels outside {{0, 1}}: {sorted(bad)}")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)

    def take(self, indices: Sequence[int] | np.ndarray) -> "TabularDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return TabularDataset(list(self.feature_names), self.values[idx], self.labels[idx])

    def equals(self, other: "TabularDataset") -> bool:
        """Cell-for-cell equality, treating nan == nan as a match."""
        if self.feature_names != other.feature_names:
            return False
        if self.values.shape != other.values.shape:
            return False
        if not np.array_equal(self.labels, other.labels):
            return False
        return bool(np.array_equal(self.values, other.values, equal_nan=True))

    def content_hash(self) -> str:
        """SHA-256 over names, cell bytes, and labels; nan-stable."""
        h = hashlib.sha256()
        h.update("\x1f".join(self.feature_names).encode("utf-8"))
        h.update(np.ascontiguousarray(self.values).tobytes())
        h.update(np.ascontiguousarray(self.labels).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class DatasetSummary:
    n_rows: int
    n_features: int
    minority_label: int
    minority_count: int
    minority_fraction: float
    missing_cell_count: int

    def to_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "n_features": self.n_features,
            "minority_label": self.minority_label,
            "minority_count": self.minority_count,
            "minority_fraction": self.minority_fraction,
            "missing_cell_count": self.missing_cell_count,
        }


def load_csv(
    path: str | Path,
    label_column: str,
    missing_tokens: Sequence[str] = DEFAULT_MISSING_TOKENS,
    label_aliases: Mapping[str, int] | None = None,
) -> TabularDataset:
    """Parse a headered CSV into a TabularDataset.

    The label column is removed from the features. Cells equal to one of
    ``missing_tokens`` (case-insensitive, after stripping) become missing;
    every other cell must parse as a finite decimal real. No row is ever
    silently dropped: each data line becomes exactly one dataset row.

    Raises:
        DataError: missing file, label column absent from the header, a
            cell that does not parse (reported with row and column), a
            label outside {0, 1}, or a row with the wrong field count.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    missing = {t.strip().lower() for t in missing_tokens}
    aliases = dict(DEFAULT_LABEL_ALIASES if label_aliases is None else label_aliases)

    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise DataError(
                f"{path}: label column '{label_column}' not in header {header}"
            )
        label_idx = header.index(label_column)
        feature_names = [h for i, h in enumerate(header) if i != label_idx]

        rows: list[list[float]] = []
        labels: list[int] = []
        for line_no, record in enumerate(reader, start=1):
            if len(record) != len(header):
                raise DataError(
                    f"{path}: row {line_no} has {len(record)} fields, "
                    f"expected {len(header)}"
                )
            raw_label = record[label_idx].strip().lower()
            if raw_label not in aliases:
                raise DataError(
                    f"{path}: row {line_no} label '{record[label_idx]}' "
                    "is outside {0, 1}"
                )
            labels.append(aliases[raw_label])
            row: list[float] = []
            for col_idx, cell in enumerate(record):
                if col_idx == label_idx:
                    continue
                token = cell.strip()
                if token.lower() in missing:
                    row.append(math.nan)
                    continue
                try:
                    value = float(token)
                except ValueError:
                    name = header[col_idx]
                    raise DataError(
                        f"{path}: row {line_no}, column '{name}': "
                        f"cannot parse '{cell}' as a number"
                    ) from None
                if not math.isfinite(value):
                    name = header[col_idx]
                    raise DataError(
                        f"{path}: row {line_no}, column '{name}': "
                        f"non-finite value '{cell}'"
                    )
                row.append(value)
            rows.append(row)

    values = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(feature_names))
    return TabularDataset(feature_names, values, np.asarray(labels, dtype=np.int64))


def save_csv(dataset: TabularDataset, path: str | Path, label_column: str = "label") -> None:
    """Write a dataset back to CSV; missing cells become empty fields.

    Floats are written with shortest round-trip repr so load_csv(save_csv(d))
    reproduces d cell-for-cell.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([*dataset.feature_names, label_column])
        for i in range(dataset.n_rows):
            cells = [
                "" if math.isnan(v) else repr(v) for v in dataset.values[i].tolist()
            ]
            cells.append(str(int(dataset.labels[i])))
            writer.writerow(cells)


def summarize(dataset: TabularDataset) -> DatasetSummary:
    """Exact class counts; minority is the rarer label, ties going to 1."""
    if dataset.n_rows == 0:
        raise DataError("cannot summarize an empty dataset")
    n_pos = int(np.sum(dataset.labels == 1))
    n_neg = dataset.n_rows - n_pos
    minority_label = 1 if n_pos <= n_neg else 0
    minority_count = n_pos if minority_label == 1 else n_neg
    return DatasetSummary(
        n_rows=dataset.n_rows,
        n_features=dataset.n_features,
        minority_label=minority_label,
        minority_count=minority_count,
        minority_fraction=minority_count / dataset.n_rows,
        missing_cell_count=int(np.sum(dataset.missing_mask())),
    )
