import json

import pytest
from click.testing import CliRunner

from leafpress.cli import main
from leafpress.config import RunConfig, load_config
from leafpress.errors import ConfigError
from leafpress.presets import load_preset, preset_names

TOML_CONFIG = """
label = "toml-run"
delta = 0.1
epsilons = [0.04]
n_min = 1
n_max = 6

[system]
kind = "cat-rotation"

[potential]
kind = "constant"
rate = 0.0
"""


def test_config_round_trip():
    cfg = load_preset("catrot-entropy")
    again = RunConfig.from_dict(json.loads(cfg.dumps()))
    assert again == cfg


def test_presets_all_valid():
    for name in preset_names():
        cfg = load_preset(name)
        assert cfg.validate() is cfg


def test_load_toml_and_json(tmp_path):
    toml_path = tmp_path / "run.toml"
    toml_path.write_text(TOML_CONFIG)
    cfg = load_config(toml_path)
    assert cfg.label == "toml-run"
    json_path = tmp_path / "run.json"
    json_path.write_text(cfg.dumps())
    assert load_config(json_path) == cfg


def test_unknown_field_rejected():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"no_such_field": 1})


def test_invalid_values_rejected():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"delta": -0.1})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"system": {"kind": "solenoid"}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"epsilons": []})


def test_estimate_command(tmp_path):
    runner = CliRunner()
    out = tmp_path / "out"
    result = runner.invoke(
        main, ["estimate", "--preset", "catrot-entropy", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    report = json.loads((out / "report.json").read_text())
    assert report["schema_version"] == 1
    assert abs(report["estimate"] - 0.9624) < 0.02
    header = (out / "table.csv").read_text().splitlines()[0]
    assert header == "n,epsilon,m,logP,logQ,logGreedy"


def test_estimate_deterministic(tmp_path):
    runner = CliRunner()
    blobs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        result = runner.invoke(
            main, ["estimate", "--preset", "catrot-entropy", "--out", str(out)]
        )
        assert result.exit_code == 0
        blobs.append(
            ((out / "report.json").read_bytes(), (out / "table.csv").read_bytes())
        )
    assert blobs[0] == blobs[1]


def test_estimate_refusal_reason(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(
        json.dumps({"epsilons": [1e-4], "n_min": 1, "n_max": 20, "label": "huge"})
    )
    runner = CliRunner()
    result = runner.invoke(
        main, ["estimate", "--config", str(cfg), "--out", str(tmp_path / "o")]
    )
    assert result.exit_code == 2
    payload = json.loads(result.stderr.strip().splitlines()[-1])
    assert payload["error"] == "lift-budget-exceeded" or payload["error"] == "under-resolved"


def test_config_and_preset_exclusive(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, ["estimate", "--out", str(tmp_path)])
    assert result.exit_code == 2
    payload = json.loads(result.stderr.strip().splitlines()[-1])
    assert payload["error"] == "invalid-config"


def test_sweep_requires_values(tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        main,
        ["sweep", "--preset", "catrot-entropy", "--out", str(tmp_path / "s")],
    )
    assert result.exit_code == 2
    payload = json.loads(result.stderr.strip().splitlines()[-1])
    assert payload["error"] == "invalid-config"


def test_sweep_epsilon_axis(tmp_path):
    runner = CliRunner()
    out = tmp_path / "s"
    result = runner.invoke(
        main,
        [
            "sweep", "--preset", "catrot-entropy", "--out", str(out),
            "--axis", "epsilon", "--values", "0.04,0.02",
        ],
    )
    assert result.exit_code == 0, result.output
    summary = json.loads((out / "sweep.json").read_text())
    assert len(summary["runs"]) == 2
    for run in summary["runs"]:
        assert abs(run["estimate"] - 0.9624) < 0.02


def test_oracle_command():
    runner = CliRunner()
    result = runner.invoke(main, ["oracle", "--instances", "20", "--max-m", "10"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output.strip())
    assert payload["passed"]
    assert payload["max_defect"] <= 1e-9


def test_verify_command(tmp_path):
    runner = CliRunner()
    out = tmp_path / "v"
    result = runner.invoke(main, ["verify", "--preset", "verify", "--out", str(out)])
    assert result.exit_code == 0, result.output
    cert = json.loads((out / "certificate.json").read_text())
    assert not cert["hard_fail"]
    assert cert["checks"]["variational"]["verdict"] == "certified-equal"
    assert cert["checks"]["oracle"]["passed"]
