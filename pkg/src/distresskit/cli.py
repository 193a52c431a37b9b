"""Command-line entry point.

Subcommands: run, summarize, train, evaluate, explain, compare.
Exit codes: 0 success, 1 usage error, 2 data/validation error (the
error report on stderr names the failed stage).  DISTRESS_SEED serves
as the master-seed fallback when neither --seed nor the config file
sets one.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from distresskit.config import PipelineConfig, load_config
from distresskit.data import load_csv, summarize
from distresskit.errors import ConfigError, DataError, DistressKitError, StageError
from distresskit.evaluate import compare_models, save_metrics_csv
from distresskit.metrics import evaluate_scores
from distresskit.models import model_from_dict, model_to_dict
from distresskit.pipeline import (
    canonical_json,
    preprocessing_doc,
    preprocessing_hash,
    run_pipeline,
    stage_scope,
)
from distresskit.preprocess import FitArtifacts, apply_transform
from distresskit.seeding import derive_seed
from distresskit.shapley import global_importance, save_shap_csv

import numpy as np


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors by default; the contract here is 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _add_common(p: argparse.ArgumentParser, *, config=True, seed=True, inp=True,
                out=True, threshold=False, no_smote=False, workers=False) -> None:
    if config:
        p.add_argument("--config", help="TOML or JSON config file")
    if seed:
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
    if inp:
        p.add_argument("--input", help="input CSV (overrides config)")
    if out:
        p.add_argument("--out", help="output directory (overrides config)")
    if threshold:
        p.add_argument("--threshold", type=float, help="decision threshold")
    if no_smote:
        p.add_argument("--no-smote", action="store_true", help="disable SMOTE")
    if workers:
        p.add_argument("--workers", type=int, help="worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="distresskit",
        description="Imbalance-aware financial distress prediction toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_run = sub.add_parser("run", help="full pipeline from a config file")
    _add_common(p_run, threshold=True, no_smote=True, workers=True)
    p_run.add_argument(
        "--normalize-report",
        action="store_true",
        help="zero wall-clock timings so reports compare byte-for-byte",
    )
    p_run.set_defaults(func=_cmd_run)

    p_sum = sub.add_parser("summarize", help="dataset statistics as JSON")
    _add_common(p_sum, config=False, seed=False, out=False)
    p_sum.add_argument("--label-column", default="label")
    p_sum.set_defaults(func=_cmd_summarize)

    p_train = sub.add_parser("train", help="train one model, save artifacts")
    _add_common(p_train, threshold=True, no_smote=True)
    p_train.add_argument(
        "--model", help="config model name to train (default: first entry)"
    )
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("evaluate", help="score a saved model on a CSV")
    p_eval.add_argument("--model", required=True, help="model_<name>.json artifact")
    p_eval.add_argument("--input", required=True, help="CSV to score")
    p_eval.add_argument(
        "--preprocessing",
        help="preprocessing.json path (default: next to the model artifact)",
    )
    p_eval.add_argument("--threshold", type=float, default=0.5)
    p_eval.set_defaults(func=_cmd_evaluate)

    p_exp = sub.add_parser("explain", help="SHAP attributions for saved model rows")
    p_exp.add_argument("--model", required=True, help="model_<name>.json artifact")
    p_exp.add_argument("--input", required=True, help="CSV with rows to explain")
    p_exp.add_argument("--preprocessing", help="preprocessing.json path")
    p_exp.add_argument("--rows", help="comma-separated row indices (default: first 10)")
    p_exp.add_argument("--background", type=int, default=100, help="background rows")
    p_exp.add_argument("--seed", type=int, default=None)
    p_exp.add_argument("--out", help="output CSV path (default: shap_<name>.csv)")
    p_exp.set_defaults(func=_cmd_explain)

    p_cmp = sub.add_parser("compare", help="train and rank every configured model")
    _add_common(p_cmp, threshold=True, no_smote=True, workers=True)
    p_cmp.set_defaults(func=_cmd_compare)
    return parser


def _effective_config(args) -> PipelineConfig:
    config = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    updates: dict = {}
    if getattr(args, "input", None):
        updates["input_path"] = args.input
    if getattr(args, "out", None):
        updates["output_dir"] = args.out
    if getattr(args, "threshold", None) is not None:
        updates["threshold"] = float(args.threshold)
    if getattr(args, "no_smote", False):
        updates["smote_enabled"] = False
    if getattr(args, "workers", None) is not None:
        updates["workers"] = int(args.workers)
    if getattr(args, "seed", None) is not None:
        updates["master_seed"] = int(args.seed)
    elif not config.master_seed_set and "DISTRESS_SEED" in os.environ:
        raw = os.environ["DISTRESS_SEED"]
        try:
            updates["master_seed"] = int(raw)
        except ValueError:
            raise ConfigError(f"DISTRESS_SEED must be an integer, got {raw!r}")
    if updates:
        config = dataclasses.replace(config, **updates)
    if config.input_path is None:
        raise ConfigError("no input dataset: pass --input or set data.input_path")
    return config


def _cmd_run(args) -> int:
    config = _effective_config(args)
    report = run_pipeline(config, normalize_report=args.normalize_report)
    print(
        f"wrote {report.output_dir / 'report.json'} "
        f"(best model: {report.best_model})"
    )
    return 0


def _cmd_summarize(args) -> int:
    if not args.input:
        raise ConfigError("summarize requires --input")
    dataset = load_csv(args.input, args.label_column)
    print(json.dumps(summarize(dataset).to_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_train(args) -> int:
    config = _effective_config(args)
    specs = config.resolved_model_specs()
    if args.model is not None:
        matches = [s for s in specs if s.display_name == args.model]
        if not matches:
            raise ConfigError(
                f"no configured model named {args.model!r}; "
                f"available: {[s.display_name for s in specs]}"
            )
        spec = matches[0]
    else:
        spec = specs[0]
    timings: dict = {}
    with stage_scope("load", timings):
        dataset = load_csv(config.input_path, config.label_column)
    with stage_scope("train", timings):
        result = compare_models(
            dataset,
            [spec],
            config.smote_config(),
            seed=config.master_seed,
            test_fraction=config.test_fraction,
            correlation_threshold=config.correlation_threshold,
            threshold=config.threshold,
        )
    row = result.rows[0]
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pre_doc = preprocessing_doc(result.artifacts, config.label_column)
    (out_dir / "preprocessing.json").write_text(canonical_json(pre_doc))
    model_doc = model_to_dict(row.fitted)
    model_doc["preprocessing_hash"] = preprocessing_hash(pre_doc)
    artifact = out_dir / f"model_{row.name}.json"
    artifact.write_text(canonical_json(model_doc))
    print(
        json.dumps(
            {
                "artifact": str(artifact),
                "preprocessing": str(out_dir / "preprocessing.json"),
                "holdout": row.metrics.to_dict(),
            },
            indent=2,
            sort_keys=True,
        )
    )
    return 0


def _load_model_and_artifacts(args):
    model_path = Path(args.model)
    if not model_path.exists():
        raise DataError(f"model artifact not found: {model_path}")
    model_doc = json.loads(model_path.read_text())
    fitted = model_from_dict(model_doc)
    pre_path = (
        Path(args.preprocessing)
        if args.preprocessing
        else model_path.parent / "preprocessing.json"
    )
    if not pre_path.exists():
        raise DataError(f"preprocessing artifacts not found: {pre_path}")
    pre_doc = json.loads(pre_path.read_text())
    linked = model_doc.get("preprocessing_hash")
    if linked is not None and linked != preprocessing_hash(pre_doc):
        raise DataError(
            "preprocessing hash mismatch: model was trained with different artifacts"
        )
    artifacts = FitArtifacts.from_dict(pre_doc["artifacts"])
    return fitted, artifacts, str(pre_doc["label_column"])


def _cmd_evaluate(args) -> int:
    timings: dict = {}
    with stage_scope("load-artifacts", timings):
        fitted, artifacts, label_column = _load_model_and_artifacts(args)
    with stage_scope("load-data", timings):
        dataset = load_csv(args.input, label_column)
    with stage_scope("transform", timings):
        transformed = apply_transform(dataset, artifacts)
    with stage_scope("score", timings):
        scores = fitted.predict_proba(transformed.values)
        report = evaluate_scores(scores, transformed.labels, args.threshold)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_explain(args) -> int:
    timings: dict = {}
    with stage_scope("load-artifacts", timings):
        fitted, artifacts, label_column = _load_model_and_artifacts(args)
    with stage_scope("load-data", timings):
        dataset = load_csv(args.input, label_column)
    with stage_scope("transform", timings):
        transformed = apply_transform(dataset, artifacts)
    with stage_scope("explain", timings):
        n = transformed.n_rows
        if args.rows:
            try:
                row_ids = [int(tok) for tok in args.rows.split(",") if tok.strip() != ""]
            except ValueError:
                raise DataError(f"--rows must be comma-separated integers, got {args.rows!r}")
            bad = [i for i in row_ids if not 0 <= i < n]
            if bad:
                raise DataError(f"row indices out of range [0, {n}): {bad}")
        else:
            row_ids = list(range(min(10, n)))
        if not row_ids:
            raise DataError("no rows selected to explain")
        seed = args.seed if args.seed is not None else int(os.environ.get("DISTRESS_SEED", "0"))
        bg_seed = derive_seed(seed, "background", 0)
        rng = np.random.default_rng(bg_seed)
        if n <= args.background:
            background = transformed.values.copy()
        else:
            keep = np.sort(rng.choice(n, size=args.background, replace=False))
            background = transformed.values[keep]
        rows_x = transformed.values[np.asarray(row_ids, dtype=np.int64)]
        importance, explanations = global_importance(
            fitted.model,
            rows_x,
            background,
            feature_names=artifacts.retained_names,
            seed=bg_seed,
        )
        out_path = Path(args.out) if args.out else Path(f"shap_{fitted.name}.csv")
        save_shap_csv(explanations, row_ids, artifacts.retained_names, out_path)
    print(
        json.dumps(
            {
                "csv": str(out_path),
                "model": fitted.name,
                "output_space": importance.output_space,
                "rows_explained": len(row_ids),
                "background_size": int(background.shape[0]),
                "global_importance": importance.to_dict(),
            },
            indent=2,
            sort_keys=True,
        )
    )
    return 0


def _cmd_compare(args) -> int:
    config = _effective_config(args)
    timings: dict = {}
    with stage_scope("load", timings):
        dataset = load_csv(config.input_path, config.label_column)
    with stage_scope("compare", timings):
        result = compare_models(
            dataset,
            config.resolved_model_specs(),
            config.smote_config(),
            seed=config.master_seed,
            test_fraction=config.test_fraction,
            correlation_threshold=config.correlation_threshold,
            threshold=config.threshold,
            workers=config.workers,
        )
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "metrics.csv"
    save_metrics_csv(result.rows, csv_path)
    widths = max([len(r.name) for r in result.rows] + [5])
    print(f"{'Model':<{widths}}  Precision  Recall  F1      ROC-AUC")
    for row in result.rows:
        m = row.metrics
        print(
            f"{row.name:<{widths}}  {m.precision:>9.4f}  {m.recall:>6.4f}  "
            f"{m.f1:<6.4f}  {m.roc_auc:.4f}"
        )
    print(f"wrote {csv_path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except StageError as exc:
        _print_error(exc.stage, exc.cause)
        return 2
    except DistressKitError as exc:
        _print_error(None, exc)
        return 2


def _print_error(stage: str | None, exc: Exception) -> None:
    doc = {
        "error": {
            "stage": stage,
            "type": type(exc).__name__,
            "message": str(exc),
        }
    }
    sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")


if __name__ == "__main__":
    sys.exit(main())
