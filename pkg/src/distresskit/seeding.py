"""Deterministic seed derivation.

Every stochastic component (split, SMOTE, per-model training, CV folds,
background sampling) gets its own seed derived from the master seed, the
component name, and an index. Derivation goes through SHA-256 so it is
stable across processes, platforms, and PYTHONHASHSEED values.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master_seed: int, component: str, index: int = 0) -> int:
    """Derive a 63-bit child seed from (master_seed, component, index)."""
    payload = f"{master_seed}:{component}:{index}".encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def rng_for(master_seed: int, component: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, component, index))
