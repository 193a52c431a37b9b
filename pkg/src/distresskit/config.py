"""Pipeline configuration: sectioned TOML (or JSON) into a typed dataclass.

Unknown sections or keys are rejected with their full path so config
typos fail loudly before any work starts.  Model seeds left unset in the
file are derived from the master seed at resolution time, which keeps a
CLI-level seed override consistent across every component.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from distresskit.errors import ConfigError, DataError
from distresskit.models import ModelSpec
from distresskit.seeding import derive_seed
from distresskit.smote import SmoteConfig

CONFIG_SCHEMA_VERSION = 1

# the six comparison models: one baseline, five ensemble entries
DEFAULT_MODEL_TABLES: tuple[dict, ...] = (
    {"family": "logistic"},
    {"family": "forest"},
    {"family": "adaboost"},
    {"family": "gbdt", "hyperparameters": {"preset": "xgboost"}},
    {"family": "gbdt", "hyperparameters": {"preset": "catboost"}},
    {"family": "gbdt", "hyperparameters": {"preset": "lightgbm"}},
)

# keys of a [[models]] table that are not hyperparameters
_MODEL_STRUCTURAL_KEYS = frozenset({"family", "name", "seed", "hyperparameters"})


def _normalise_model_table(table: dict) -> dict:
    """Fold flat hyperparameter keys into the nested ``hyperparameters`` dict.

    TOML model tables may spell hyperparameters either inline
    (``n_trees = 200`` next to ``family``) or under an explicit
    ``hyperparameters`` sub-table; both normalise to the same spec.
    """
    doc = {k: table[k] for k in table if k in _MODEL_STRUCTURAL_KEYS}
    hyper = dict(table.get("hyperparameters", {}))
    for key, value in table.items():
        if key in _MODEL_STRUCTURAL_KEYS:
            continue
        if key in hyper:
            raise ConfigError(f"model table sets hyperparameter {key!r} twice")
        hyper[key] = value
    doc["hyperparameters"] = hyper
    return doc


_SECTIONS = {
    "data": {"input_path", "label_column"},
    "preprocess": {"test_fraction", "correlation_threshold"},
    "smote": {"enabled", "k_neighbors", "target_ratio"},
    "evaluate": {"cv_folds", "threshold"},
    "explain": {"rows", "background_size"},
    "pipeline": {"master_seed", "output_dir", "workers"},
}


@dataclass
class PipelineConfig:
    input_path: str | None = None
    label_column: str = "label"
    test_fraction: float = 0.2
    correlation_threshold: float = 0.95
    smote_enabled: bool = True
    smote_k_neighbors: int = 5
    smote_target_ratio: float = 1.0
    model_tables: list[dict] = field(
        default_factory=lambda: [dict(t) for t in DEFAULT_MODEL_TABLES]
    )
    cv_folds: int = 5
    threshold: float = 0.5
    master_seed: int = 0
    output_dir: str = "out"
    workers: int = 1
    explain_rows: int = 10
    background_size: int = 100
    # whether the config file set master_seed explicitly (controls whether
    # the DISTRESS_SEED environment fallback may apply)
    master_seed_set: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError(
                f"preprocess.test_fraction must be in (0, 1), got {self.test_fraction}"
            )
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(
                f"evaluate.threshold must be in [0, 1], got {self.threshold}"
            )
        if self.cv_folds < 2:
            raise ConfigError(f"evaluate.cv_folds must be >= 2, got {self.cv_folds}")
        if self.workers < 1:
            raise ConfigError(f"pipeline.workers must be >= 1, got {self.workers}")
        if self.explain_rows < 0:
            raise ConfigError(f"explain.rows must be >= 0, got {self.explain_rows}")
        if self.background_size < 1:
            raise ConfigError(
                f"explain.background_size must be >= 1, got {self.background_size}"
            )
        if not self.model_tables:
            raise ConfigError("at least one [[models]] entry is required")
        # validates smote parameter ranges even when disabled
        try:
            SmoteConfig(
                k_neighbors=self.smote_k_neighbors,
                target_ratio=self.smote_target_ratio,
                seed=0,
            )
        except DataError as exc:
            raise ConfigError(f"smote.{exc}") from exc
        names = [spec.display_name for spec in self._specs_with_seed(0)]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ConfigError(f"duplicate model names: {dupes}")

    def _specs_with_seed(self, master_seed: int) -> list[ModelSpec]:
        specs = []
        for i, table in enumerate(self.model_tables):
            doc = _normalise_model_table(table)
            if "seed" not in doc:
                doc["seed"] = derive_seed(master_seed, "model", i)
            specs.append(ModelSpec.from_dict(doc))
        return specs

    def resolved_model_specs(self) -> list[ModelSpec]:
        """ModelSpecs with unset seeds derived from the current master seed."""
        return self._specs_with_seed(self.master_seed)

    def smote_config(self) -> SmoteConfig | None:
        if not self.smote_enabled:
            return None
        return SmoteConfig(
            k_neighbors=self.smote_k_neighbors,
            target_ratio=self.smote_target_ratio,
            seed=derive_seed(self.master_seed, "smote", 0),
        )

    def to_echo_dict(self) -> dict:
        """Every effective setting, defaults resolved — no hidden parameters."""
        specs = self.resolved_model_specs()
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "data": {
                "input_path": self.input_path,
                "label_column": self.label_column,
            },
            "preprocess": {
                "test_fraction": self.test_fraction,
                "correlation_threshold": self.correlation_threshold,
            },
            "smote": {
                "enabled": self.smote_enabled,
                "k_neighbors": self.smote_k_neighbors,
                "target_ratio": self.smote_target_ratio,
            },
            "evaluate": {"cv_folds": self.cv_folds, "threshold": self.threshold},
            "explain": {
                "rows": self.explain_rows,
                "background_size": self.background_size,
            },
            "pipeline": {
                "master_seed": self.master_seed,
                "output_dir": self.output_dir,
                "workers": self.workers,
            },
            "models": [
                {
                    "name": spec.display_name,
                    "family": spec.family,
                    "seed": spec.seed,
                    "hyperparameters": spec.resolved_hyperparameters(),
                }
                for spec in specs
            ],
        }


def parse_config(doc: dict) -> PipelineConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"config root must be a table, got {type(doc).__name__}")
    version = doc.get("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported config schema_version {version!r} "
            f"(expected {CONFIG_SCHEMA_VERSION})"
        )
    unknown_sections = sorted(set(doc) - set(_SECTIONS) - {"schema_version", "models"})
    if unknown_sections:
        raise ConfigError(f"unknown config sections: {unknown_sections}")
    for name, allowed in _SECTIONS.items():
        section = doc.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"config section [{name}] must be a table")
        unknown = sorted(set(section) - allowed)
        if unknown:
            raise ConfigError(
                f"unknown keys in config section [{name}]: {unknown}"
            )
    models = doc.get("models", [dict(t) for t in DEFAULT_MODEL_TABLES])
    if not isinstance(models, list):
        raise ConfigError("config key 'models' must be an array of tables")

    data = doc.get("data", {})
    preprocess = doc.get("preprocess", {})
    smote = doc.get("smote", {})
    evaluate = doc.get("evaluate", {})
    explain = doc.get("explain", {})
    pipeline = doc.get("pipeline", {})
    input_path = data.get("input_path")
    return PipelineConfig(
        input_path=str(input_path) if input_path is not None else None,
        label_column=str(data.get("label_column", "label")),
        test_fraction=float(preprocess.get("test_fraction", 0.2)),
        correlation_threshold=float(preprocess.get("correlation_threshold", 0.95)),
        smote_enabled=bool(smote.get("enabled", True)),
        smote_k_neighbors=int(smote.get("k_neighbors", 5)),
        smote_target_ratio=float(smote.get("target_ratio", 1.0)),
        model_tables=[dict(t) for t in models],
        cv_folds=int(evaluate.get("cv_folds", 5)),
        threshold=float(evaluate.get("threshold", 0.5)),
        master_seed=int(pipeline.get("master_seed", 0)),
        master_seed_set="master_seed" in pipeline,
        output_dir=str(pipeline.get("output_dir", "out")),
        workers=int(pipeline.get("workers", 1)),
        explain_rows=int(explain.get("rows", 10)),
        background_size=int(explain.get("background_size", 100)),
    )


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    try:
        if path.suffix.lower() == ".json":
            doc = json.loads(text)
        else:
            doc = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return parse_config(doc)
