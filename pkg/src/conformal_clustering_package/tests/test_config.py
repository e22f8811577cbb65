"""
Tests for config loading, validation, hashing, run configurations and settings.
"""

import os
from pathlib import Path

import pytest

from conformal_clustering_package.config.config_validator import (
    ConfigurationError,
    config_hash,
    load_json_config,
    validate_model,
)
from conformal_clustering_package.config.constants import ClustererKind, MixtureFamily, SweepParameter
from conformal_clustering_package.config.run_config import (
    DiagnosticsRunConfig,
    ExperimentRunConfig,
    FitRunConfig,
    HeatmapRunConfig,
    PredictSetsRunConfig,
    SimulateRunConfig,
)
from conformal_clustering_package.config.settings import ConformalSettings
from conformal_clustering_package.config.specs import ClassifierSpec, ClustererSpec
from conformal_clustering_package.utils.error_handler import DataIOError

CONFIG_DIR = Path(__file__).resolve().parents[3] / "configs"


def test_load_json_config(write_config, tmp_path):
    path = write_config("fit.json", {"K": 3, "alpha": 0.1})
    assert load_json_config(path) == {"K": 3, "alpha": 0.1}

    with pytest.raises(DataIOError):
        load_json_config(str(tmp_path / "missing.json"))

    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_json_config(str(broken))

    listed = write_config("list.json", [1, 2, 3])
    with pytest.raises(ConfigurationError):
        load_json_config(listed)


def test_validate_model_names_every_bad_field():
    with pytest.raises(ConfigurationError) as excinfo:
        validate_model(FitRunConfig, {"data": "x.csv", "K": 0, "alpha": 1.5, "seed": 1, "output": "p.json"})
    message = excinfo.value.message
    assert "K" in message
    assert "alpha" in message


def test_validate_model_rejects_unknown_keys():
    with pytest.raises(ConfigurationError) as excinfo:
        validate_model(PredictSetsRunConfig, {"pipeline": "p.json", "data": "d.csv", "output": "s.csv", "colour": 1})
    assert "colour" in excinfo.value.message


def test_config_hash_is_canonical():
    first = validate_model(FitRunConfig, {"data": "x.csv", "K": 3, "seed": 1, "output": "p.json"})
    second = validate_model(FitRunConfig, {"output": "p.json", "seed": 1, "K": 3, "data": "x.csv", "alpha": 0.1})
    assert config_hash(first) == config_hash(second)
    assert len(config_hash(first)) == 64
    third = validate_model(FitRunConfig, {"data": "x.csv", "K": 3, "seed": 2, "output": "p.json"})
    assert config_hash(third) != config_hash(first)


def test_specs_reject_inconsistent_settings():
    with pytest.raises(ValueError):
        ClustererSpec(kind=ClustererKind.FCM, family=MixtureFamily.GAUSSIAN_DIAG)
    with pytest.raises(ValueError):
        ClustererSpec(fuzziness=1.0)
    with pytest.raises(ValueError):
        ClassifierSpec(random_features=-1)
    assert ClustererSpec().kind == ClustererKind.MIXTURE


def test_fit_run_config_rejects_oracle_labels():
    with pytest.raises(ConfigurationError):
        validate_model(
            FitRunConfig, {"data": "x.csv", "K": 3, "seed": 1, "output": "p.json", "mode": "oracle-labels"}
        )


def test_simulate_run_config_accepts_preset_and_seed_range():
    cfg = validate_model(
        SimulateRunConfig,
        {"preset": "gmm-2d", "sigma2": 1.0, "n": 10, "seed": 2 ** 64 - 1, "features_out": "f.csv", "labels_out": "l.csv"},
    )
    assert cfg.resolved_generator().K == 3
    with pytest.raises(ConfigurationError):
        validate_model(
            SimulateRunConfig,
            {"preset": "gmm-2d", "sigma2": 1.0, "n": 10, "seed": 2 ** 64, "features_out": "f.csv", "labels_out": "l.csv"},
        )


def test_heatmap_run_config_bounds():
    base = {"pipeline": "p.json", "x1_min": -1, "x1_max": 1, "x2_min": -1, "x2_max": 1, "output": "h.csv"}
    assert validate_model(HeatmapRunConfig, base).resolution == 50
    with pytest.raises(ConfigurationError):
        validate_model(HeatmapRunConfig, {**base, "x1_min": 2})
    with pytest.raises(ConfigurationError):
        validate_model(HeatmapRunConfig, {**base, "resolution": 0})


def test_diagnostics_run_config():
    base = {"preset": "gmm-2d", "sigma2": 1.0, "n_grid": [100, 200], "seed": 3, "output": "d.json"}
    cfg = validate_model(DiagnosticsRunConfig, base)
    assert cfg.reps == 50
    assert cfg.output_path("runs") == "d.json"
    defaulted = validate_model(DiagnosticsRunConfig, {k: v for k, v in base.items() if k != "output"})
    assert defaulted.output_path("runs") == os.path.join("runs", "diagnostics.json")
    with pytest.raises(ConfigurationError) as excinfo:
        validate_model(DiagnosticsRunConfig, {**base, "data": "real.csv"})
    assert "posterior" in excinfo.value.message
    with pytest.raises(ConfigurationError):
        validate_model(DiagnosticsRunConfig, {**base, "n_grid": [101]})


def test_experiment_outputs_default_under_the_output_directory():
    base = {
        "name": "sweep",
        "preset": "gmm-2d",
        "sigma2": 1.0,
        "sweep": {"parameter": "n", "values": [100]},
        "seed": 1,
    }
    cfg = validate_model(ExperimentRunConfig, base)
    assert cfg.reps == 1
    assert cfg.test_size == 2000
    assert cfg.output_paths("runs") == (
        os.path.join("runs", "sweep_tidy.csv"),
        os.path.join("runs", "sweep_aggregate.csv"),
    )
    explicit = validate_model(ExperimentRunConfig, {**base, "tidy_output": "t.csv"})
    assert explicit.output_paths("runs") == ("t.csv", os.path.join("runs", "sweep_aggregate.csv"))


@pytest.mark.parametrize("path", sorted((CONFIG_DIR / "experiments").glob("*.json")), ids=lambda p: p.stem)
def test_shipped_experiment_configs_validate(path):
    cfg = validate_model(ExperimentRunConfig, {**load_json_config(str(path)), "seed": 1})
    generator = cfg.resolved_generator()
    for index in range(len(cfg.sweep.values)):
        assert cfg.cell(index)[0].K == generator.K


def test_shipped_n_sweeps_cover_every_preset():
    presets = set()
    for path in (CONFIG_DIR / "experiments").glob("*.json"):
        cfg = validate_model(ExperimentRunConfig, {**load_json_config(str(path)), "seed": 1})
        if cfg.sweep.parameter == SweepParameter.N:
            presets.add(cfg.preset)
    assert presets == {"gmm-2d", "gamma-2d", "gmm-highdim", "gamma-highdim"}


def test_settings_overrides_and_nested_lookup():
    settings = ConformalSettings({"processing": {"max_workers": 4}, "output": {"base_dir": "runs"}})
    assert settings.get_nested("processing.max_workers") == 4
    assert settings.get_nested("output.base_dir") == "runs"
    assert settings.get_nested("logging.missing", "fallback") == "fallback"
    assert settings.get_nested("mlflow.experiment_name")
    assert settings.to_dict()["processing"] == {"max_workers": 4}


def test_settings_mlflow_toggle():
    assert ConformalSettings({"mlflow": {"tracking": True}}).is_mlflow_enabled()
    assert not ConformalSettings({"mlflow": {"tracking": False}}).is_mlflow_enabled()
