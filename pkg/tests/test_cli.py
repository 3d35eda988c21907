import json

import pytest
import yaml

from nls_blowup.cli import ConfigError, main, run, validate_config


def _write_config(tmp_path, payload, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(payload))
    return str(path)


def test_unknown_experiment_rejected():
    with pytest.raises(ConfigError, match="unknown experiment"):
        validate_config({"experiment": "nope"})


def test_unknown_key_is_hard_error():
    with pytest.raises(ConfigError, match="unknown key 'rtol'"):
        validate_config({"experiment": "identities", "rtol": 1e-8})


def test_validation_error_names_the_field():
    with pytest.raises(ConfigError, match="eps"):
        validate_config({"experiment": "full_validate", "eps": 1.5})


def test_defaults_are_filled_in():
    name, cfg = validate_config({"experiment": "lifespan_sweep"})
    assert name == "lifespan_sweep"
    assert cfg["case"] == 1
    assert len(cfg["eps_list"]) == 5
    assert cfg["profile_width"] == 4.0


def test_list_json_catalog(capsys):
    assert main(["list", "--json"]) == 0
    catalog = json.loads(capsys.readouterr().out)
    assert set(catalog) == {"identities", "chain_validate", "lifespan_sweep",
                            "detune", "full_validate", "virial"}
    for entry in catalog.values():
        assert "expected_runtime" in entry and "keys" in entry


def test_malformed_config_exit_code(tmp_path, capsys):
    path = _write_config(tmp_path, {"experiment": "full_validate", "eps": 1.5})
    assert main(["run", path, "--out", str(tmp_path)]) == 2
    assert "eps" in capsys.readouterr().err


def test_identities_run_end_to_end(tmp_path, capsys):
    path = _write_config(tmp_path, {"experiment": "identities"})
    out = tmp_path / "artifacts"
    assert run(path, out_dir=str(out), seed=3) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["all_passed"] is True
    assert manifest["experiment"] == "identities"
    assert manifest["seed"] == 3
    assert manifest["schema_version"] == 1
    assert len(manifest["config_sha256"]) == 64
    assert manifest["wall_time_s"] > 0
    for name in manifest["files"]:
        assert (out / name).exists()
    stdout = capsys.readouterr().out
    assert "identities: PASS" in stdout


def test_identities_csv_is_deterministic(tmp_path):
    path = _write_config(tmp_path, {"experiment": "identities"})
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run(path, out_dir=str(out_a), seed=1) == 0
    assert run(path, out_dir=str(out_b), seed=1) == 0
    manifest = json.loads((out_a / "manifest.json").read_text())
    for name in manifest["files"]:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
