"""CLI contract tests, run in-process through ``cli.main(argv)``.

Covered: exit codes (0 success, 1 usage, 2 data/validation), the seed
precedence chain (--seed > config > DISTRESS_SEED > 0), JSON error
reports naming the failed stage, and the train/evaluate/explain artifact
round trip with its preprocessing-hash linkage.
"""

from __future__ import annotations

import json

import pytest

from distresskit import cli
from distresskit.seeding import derive_seed
from tests.conftest import write_config


def _run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(autouse=True)
def _no_ambient_seed(monkeypatch):
    monkeypatch.delenv("DISTRESS_SEED", raising=False)


@pytest.fixture()
def cfg(tmp_path, small_config_text):
    return write_config(tmp_path, small_config_text)


MINIMAL_CONFIG = """
[data]
input_path = "{csv}"
label_column = "label"

[evaluate]
cv_folds = 3

[explain]
rows = 2
background_size = 16

[pipeline]
output_dir = "OUT_DIR"

[[models]]
family = "logistic"

[[models]]
name = "xgboost"
family = "gbdt"
n_trees = 10
max_depth = 3
"""


@pytest.fixture()
def minimal_cfg(tmp_path, ring_csv):
    """Config with no master_seed, so environment fallback is reachable."""
    return write_config(tmp_path, MINIMAL_CONFIG.format(csv=ring_csv))


def _report(out_dir) -> dict:
    return json.loads((out_dir / "report.json").read_text())


class TestExitCodes:
    def test_missing_subcommand_is_usage_error(self, capsys):
        code, _, err = _run(capsys)
        assert code == 1

    def test_unknown_subcommand_is_usage_error(self, capsys):
        code, _, _ = _run(capsys, "frobnicate")
        assert code == 1

    def test_missing_required_option_is_usage_error(self, capsys):
        code, _, _ = _run(capsys, "evaluate", "--input", "x.csv")
        assert code == 1

    def test_data_error_is_exit_two(self, capsys, tmp_path):
        code, _, err = _run(
            capsys, "summarize", "--input", str(tmp_path / "ghost.csv")
        )
        assert code == 2
        doc = json.loads(err)
        assert doc["error"]["type"] == "DataError"

    def test_config_error_is_exit_two(self, capsys, ring_csv, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("[data]\ninput_path = 'x.csv'\n[smote]\nk_neighbors = 0\n")
        code, _, err = _run(capsys, "run", "--config", str(bad))
        assert code == 2
        assert "k_neighbors" in json.loads(err)["error"]["message"]

    def test_stage_error_names_stage(self, capsys, tmp_path, ring_csv):
        cfg_path, _ = write_config(
            tmp_path,
            MINIMAL_CONFIG.format(csv=ring_csv).replace(
                'label_column = "label"', 'label_column = "bankrupt"'
            ),
        )
        code, _, err = _run(capsys, "run", "--config", str(cfg_path))
        assert code == 2
        doc = json.loads(err)
        assert doc["error"]["stage"] == "load"
        assert "bankrupt" in doc["error"]["message"]


class TestSummarize:
    def test_reports_dataset_statistics(self, capsys, ring_csv):
        code, out, _ = _run(capsys, "summarize", "--input", ring_csv)
        assert code == 0
        doc = json.loads(out)
        assert doc["n_rows"] == 800
        assert doc["minority_label"] == 1
        assert 0.0 < doc["minority_fraction"] < 0.5

    def test_requires_input(self, capsys):
        code, _, err = _run(capsys, "summarize")
        assert code == 2
        assert "--input" in json.loads(err)["error"]["message"]


class TestRun:
    def test_full_run_writes_report(self, capsys, cfg):
        cfg_path, out_dir = cfg
        code, out, _ = _run(capsys, "run", "--config", str(cfg_path))
        assert code == 0
        assert "report.json" in out and "best model" in out
        doc = _report(out_dir)
        assert doc["seeds"]["master"] == 17  # from the config file

    def test_seed_flag_beats_config(self, capsys, cfg):
        cfg_path, out_dir = cfg
        code, _, _ = _run(capsys, "run", "--config", str(cfg_path), "--seed", "5")
        assert code == 0
        doc = _report(out_dir)
        assert doc["seeds"]["master"] == 5
        assert doc["seeds"]["split"] == derive_seed(5, "split", 0)

    def test_config_seed_beats_environment(self, capsys, cfg, monkeypatch):
        monkeypatch.setenv("DISTRESS_SEED", "99")
        cfg_path, out_dir = cfg
        code, _, _ = _run(capsys, "run", "--config", str(cfg_path))
        assert code == 0
        assert _report(out_dir)["seeds"]["master"] == 17

    def test_environment_fallback_when_config_silent(
        self, capsys, minimal_cfg, monkeypatch
    ):
        monkeypatch.setenv("DISTRESS_SEED", "99")
        cfg_path, out_dir = minimal_cfg
        code, _, _ = _run(capsys, "run", "--config", str(cfg_path))
        assert code == 0
        assert _report(out_dir)["seeds"]["master"] == 99

    def test_default_seed_is_zero(self, capsys, minimal_cfg):
        cfg_path, out_dir = minimal_cfg
        code, _, _ = _run(capsys, "run", "--config", str(cfg_path))
        assert code == 0
        assert _report(out_dir)["seeds"]["master"] == 0

    def test_non_integer_environment_seed_fails_loudly(
        self, capsys, minimal_cfg, monkeypatch
    ):
        monkeypatch.setenv("DISTRESS_SEED", "lucky")
        cfg_path, _ = minimal_cfg
        code, _, err = _run(capsys, "run", "--config", str(cfg_path))
        assert code == 2
        assert "DISTRESS_SEED" in json.loads(err)["error"]["message"]

    def test_no_smote_flag_lands_in_report(self, capsys, cfg):
        cfg_path, out_dir = cfg
        code, _, _ = _run(capsys, "run", "--config", str(cfg_path), "--no-smote")
        assert code == 0
        doc = _report(out_dir)
        assert doc["smote"] == {"enabled": False}
        assert doc["config"]["smote"]["enabled"] is False

    def test_workers_and_threshold_overrides_echoed(self, capsys, cfg):
        cfg_path, out_dir = cfg
        code, _, _ = _run(
            capsys, "run", "--config", str(cfg_path),
            "--workers", "2", "--threshold", "0.3",
        )
        assert code == 0
        doc = _report(out_dir)
        assert doc["config"]["pipeline"]["workers"] == 2
        assert doc["config"]["evaluate"]["threshold"] == 0.3
        assert doc["models"][0]["holdout"]["threshold"] == 0.3

    def test_out_flag_redirects_everything(self, capsys, cfg, tmp_path):
        cfg_path, _ = cfg
        alt = tmp_path / "elsewhere"
        code, _, _ = _run(capsys, "run", "--config", str(cfg_path), "--out", str(alt))
        assert code == 0
        assert (alt / "report.json").exists()
        assert (alt / "figures" / "roc_overlay.svg").exists()


class TestArtifactRoundTrip:
    @pytest.fixture()
    def trained(self, capsys, minimal_cfg):
        cfg_path, out_dir = minimal_cfg
        code, out, _ = _run(
            capsys, "train", "--config", str(cfg_path), "--model", "xgboost"
        )
        assert code == 0
        doc = json.loads(out)
        return cfg_path, out_dir, doc

    def test_train_reports_artifacts_and_holdout(self, trained):
        _, out_dir, doc = trained
        assert doc["artifact"].endswith("model_xgboost.json")
        assert (out_dir / "model_xgboost.json").exists()
        assert (out_dir / "preprocessing.json").exists()
        assert 0.0 <= doc["holdout"]["roc_auc"] <= 1.0

    def test_unknown_model_name_lists_choices(self, capsys, minimal_cfg):
        cfg_path, _ = minimal_cfg
        code, _, err = _run(
            capsys, "train", "--config", str(cfg_path), "--model", "catboost"
        )
        assert code == 2
        msg = json.loads(err)["error"]["message"]
        assert "catboost" in msg and "xgboost" in msg

    def test_evaluate_saved_model(self, capsys, trained, ring_csv):
        _, out_dir, _ = trained
        code, out, _ = _run(
            capsys, "evaluate",
            "--model", str(out_dir / "model_xgboost.json"),
            "--input", ring_csv,
        )
        assert code == 0
        doc = json.loads(out)
        assert set(doc) >= {"precision", "recall", "f1", "roc_auc", "confusion"}
        assert doc["n_rows"] == 800

    def test_evaluate_rejects_mismatched_preprocessing(
        self, capsys, trained, minimal_cfg, tmp_path, ring_csv
    ):
        cfg_path, out_dir, _ = trained
        # retrain under a different seed: same schema, different artifacts
        other = tmp_path / "other"
        code, _, _ = _run(
            capsys, "train", "--config", str(cfg_path), "--model", "xgboost",
            "--seed", "123", "--out", str(other),
        )
        assert code == 0
        code, _, err = _run(
            capsys, "evaluate",
            "--model", str(out_dir / "model_xgboost.json"),
            "--input", ring_csv,
            "--preprocessing", str(other / "preprocessing.json"),
        )
        assert code == 2
        assert "hash mismatch" in json.loads(err)["error"]["message"]
        assert json.loads(err)["error"]["stage"] == "load-artifacts"

    def test_explain_saved_model(self, capsys, trained, ring_csv, tmp_path):
        _, out_dir, _ = trained
        shap_path = tmp_path / "attr.csv"
        code, out, _ = _run(
            capsys, "explain",
            "--model", str(out_dir / "model_xgboost.json"),
            "--input", ring_csv,
            "--rows", "0,3,7",
            "--background", "20",
            "--out", str(shap_path),
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["rows_explained"] == 3
        assert doc["background_size"] == 20
        lines = shap_path.read_text().strip().split("\n")
        assert len(lines) == 4
        assert [line.split(",")[0] for line in lines[1:]] == ["0", "3", "7"]

    def test_explain_rejects_out_of_range_rows(self, capsys, trained, ring_csv):
        _, out_dir, _ = trained
        code, _, err = _run(
            capsys, "explain",
            "--model", str(out_dir / "model_xgboost.json"),
            "--input", ring_csv,
            "--rows", "0,9999",
        )
        assert code == 2
        assert "out of range" in json.loads(err)["error"]["message"]


class TestCompare:
    def test_table_and_csv(self, capsys, minimal_cfg):
        cfg_path, out_dir = minimal_cfg
        code, out, _ = _run(capsys, "compare", "--config", str(cfg_path))
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0].split()[:3] == ["Model", "Precision", "Recall"]
        assert len(lines) == 1 + 2 + 1  # header, two models, "wrote" line
        csv_lines = (out_dir / "metrics.csv").read_text().strip().split("\n")
        assert csv_lines[0] == "Model,Precision,Recall,F1,ROC-AUC"
        assert len(csv_lines) == 3
