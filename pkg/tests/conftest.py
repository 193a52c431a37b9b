"""Shared fixtures for the distresskit test suite.

Anything expensive (full pipeline runs, 5k-row fixtures) is session-scoped
so the suite stays fast; per-test state always goes through tmp_path.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from distresskit.data import TabularDataset, save_csv
from distresskit.synthetic import inject_missing, make_ring_dataset


@pytest.fixture(scope="session")
def ring_small() -> TabularDataset:
    """800-row, 5%-minority ring dataset; ~1% missing cells."""
    ds = make_ring_dataset(n_rows=800, minority_fraction=0.05, n_features=8, seed=42)
    return inject_missing(ds, 0.01, seed=1)


@pytest.fixture(scope="session")
def ring_csv(ring_small, tmp_path_factory) -> str:
    path = tmp_path_factory.mktemp("data") / "ring.csv"
    save_csv(ring_small, path, label_column="label")
    return str(path)


@pytest.fixture(scope="session")
def small_config_text(ring_csv) -> str:
    """A fast-but-complete pipeline config over the ring CSV."""
    return f"""
schema_version = 1

[data]
input_path = "{ring_csv}"
label_column = "label"

[preprocess]
test_fraction = 0.2
correlation_threshold = 0.95

[smote]
enabled = true
k_neighbors = 5
target_ratio = 1.0

[evaluate]
cv_folds = 3
threshold = 0.5

[explain]
rows = 3
background_size = 24

[pipeline]
master_seed = 17
output_dir = "OUT_DIR"
workers = 1

[[models]]
family = "logistic"

[[models]]
name = "forest"
family = "forest"
n_trees = 12
max_depth = 6

[[models]]
name = "xgboost"
family = "gbdt"
preset = "xgboost"
n_trees = 15
"""


def write_config(tmp_path, text: str, out_dir=None):
    """Materialize a config with OUT_DIR substituted.

    Returns (config_path, output_dir) as Paths.
    """
    out = Path(out_dir if out_dir is not None else tmp_path / "out")
    cfg = tmp_path / "config.toml"
    cfg.write_text(text.replace("OUT_DIR", str(out)), encoding="utf-8")
    return cfg, out


def random_scores_labels(rng: np.random.Generator, n: int, tie_prob: float = 0.3):
    """Score/label pairs with deliberate score ties and both classes present."""
    scores = rng.normal(size=n)
    if rng.uniform() < tie_prob:
        # quantize a chunk so tied scores straddle both classes
        scores = np.round(scores, 1)
    labels = rng.integers(0, 2, size=n)
    labels[0], labels[1] = 0, 1
    return scores, labels
