"""Seeded synthetic datasets used by experiments and the test suite.

The main fixture mimics the structure of interest: heavy class imbalance
with a nonlinearly separable minority.  Majority rows are standard
Gaussian noise in all features; minority rows live on an annulus of
radius 2..3 in the first two features, which no linear model can carve
out but shallow trees handle easily.  A mild mean shift on the third
feature gives linear baselines a weaker (but real) foothold, so model
comparisons measure "captures the nonlinearity" rather than "beats a
coin flip".
"""

from __future__ import annotations

import numpy as np

from distresskit.data import TabularDataset
from distresskit.seeding import rng_for


def make_ring_dataset(
    n_rows: int = 5000,
    minority_fraction: float = 0.02,
    n_features: int = 10,
    *,
    seed: int = 0,
    radius_lo: float = 2.5,
    radius_hi: float = 3.5,
    linear_shift: float = 0.5,
) -> TabularDataset:
    if n_features < 2:
        raise ValueError("ring fixture needs at least 2 features")
    rng = rng_for(seed, "synthetic-ring")
    n_minority = int(round(minority_fraction * n_rows))
    n_majority = n_rows - n_minority

    X = np.empty((n_rows, n_features))
    X[:n_majority] = rng.standard_normal((n_majority, n_features))

    radius = rng.uniform(radius_lo, radius_hi, size=n_minority)
    angle = rng.uniform(0.0, 2.0 * np.pi, size=n_minority)
    minority = rng.standard_normal((n_minority, n_features))
    minority[:, 0] = radius * np.cos(angle)
    minority[:, 1] = radius * np.sin(angle)
    if n_features > 2:
        minority[:, 2] += linear_shift
    X[n_majority:] = minority

    y = np.concatenate(
        [np.zeros(n_majority, dtype=np.int64), np.ones(n_minority, dtype=np.int64)]
    )
    order = rng.permutation(n_rows)
    names = [f"x{j:02d}" for j in range(n_features)]
    return TabularDataset(feature_names=names, values=X[order], labels=y[order])


def make_linear_dataset(
    n_rows: int = 400,
    n_features: int = 4,
    *,
    seed: int = 0,
    positive_fraction: float = 0.5,
) -> TabularDataset:
    """Linearly separable-ish data: label from a noisy halfspace."""
    rng = rng_for(seed, "synthetic-linear")
    X = rng.standard_normal((n_rows, n_features))
    w = rng.standard_normal(n_features)
    margin = X @ w + 0.25 * rng.standard_normal(n_rows)
    cut = np.quantile(margin, 1.0 - positive_fraction)
    y = (margin >= cut).astype(np.int64)
    names = [f"x{j:02d}" for j in range(n_features)]
    return TabularDataset(feature_names=names, values=X, labels=y)


def inject_missing(
    dataset: TabularDataset, fraction: float, *, seed: int = 0
) -> TabularDataset:
    """Copy of the dataset with a seeded share of feature cells set to NaN."""
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must be in [0, 1), got {fraction}")
    rng = rng_for(seed, "synthetic-missing")
    values = dataset.values.copy()
    n_cells = values.size
    n_missing = int(round(fraction * n_cells))
    flat = rng.choice(n_cells, size=n_missing, replace=False)
    values.reshape(-1)[flat] = np.nan
    return TabularDataset(
        feature_names=list(dataset.feature_names),
        values=values,
        labels=dataset.labels.copy(),
    )
