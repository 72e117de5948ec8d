"""Command-line interface: exit codes, artifacts, reproducibility."""

import json
import os

import pytest

from snlevy.cli import _parse_grid, run

CL_CONFIG = {
    "model": {"premium": 2.0, "jumps": [{"rate": 1.0, "mean": 1.0}]},
    "params": {"q": 0.1, "r": 1.0, "alpha": 0.3, "beta": 1.5},
}
SIM_CONFIG = {
    "model": {"premium": 2.0, "jumps": [{"rate": 1.0, "mean": 1.0}]},
    "params": {"q": 3.0, "r": 1.0, "alpha": 0.3, "beta": 1.5},
    "barriers": [0.4, 1.5],
    "x0": [0.5, 1.0],
    "simulation": {"dt": 0.001, "n_paths": 500, "seed": 3},
}


def _write(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _strip_metadata(text: str) -> str:
    doc = json.loads(text)
    doc.pop("metadata", None)
    return json.dumps(doc, sort_keys=True)


def test_model_validate_ok(tmp_path, capsys):
    code = run(["model-validate", "--config", _write(tmp_path, CL_CONFIG)])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["valid"] is True


def test_model_validate_failure(tmp_path, capsys):
    bad = {"model": {"drift": -1.0}}
    code = run(["model-validate", "--config", _write(tmp_path, bad)])
    assert code == 1
    out = json.loads(capsys.readouterr().out)
    assert out["valid"] is False
    assert out["problems"]


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = dict(CL_CONFIG, extra=1)
    assert run(["solve", "--config", _write(tmp_path, cfg)]) == 1


def test_missing_config_file():
    assert run(["solve", "--config", "/does/not/exist.json"]) == 1


def test_solve_writes_artifact(tmp_path, capsys):
    out_dir = tmp_path / "out"
    code = run(["solve", "--config", _write(tmp_path, CL_CONFIG),
                "--out", str(out_dir)])
    assert code == 0
    doc = json.loads((out_dir / "solve.json").read_text())
    assert doc["case"] == "InteriorFirstOrder"
    assert 0 < doc["b1_star"] < doc["b2_star"]
    assert "timestamp" in doc["metadata"]


def test_scale_eval_csv(tmp_path, capsys):
    out_dir = tmp_path / "out"
    code = run(["scale-eval", "--config", _write(tmp_path, CL_CONFIG),
                "--out", str(out_dir), "--grid", "0.1:5:7"])
    assert code == 0
    lines = (out_dir / "scale-eval.csv").read_text().strip().splitlines()
    assert lines[0].startswith("x,W,W_prime")
    assert len(lines) == 8


def test_value_eval(tmp_path, capsys):
    out_dir = tmp_path / "out"
    code = run(["value-eval", "--config", _write(tmp_path, CL_CONFIG),
                "--out", str(out_dir), "--grid", "0.1:4:5"])
    assert code == 0
    lines = (out_dir / "value-eval.csv").read_text().strip().splitlines()
    assert len(lines) == 6


def test_verify_hjb_passes(tmp_path, capsys):
    code = run(["verify-hjb", "--config", _write(tmp_path, CL_CONFIG),
                "--grid", "0.05:6:40"])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["passed"] is True


def test_verify_hjb_violation_exit_code(tmp_path, capsys):
    # an absurdly tight tolerance turns quadrature noise into a violation
    code = run(["verify-hjb", "--config", _write(tmp_path, CL_CONFIG),
                "--grid", "0.05:6:40", "--tol", "1e-300"])
    assert code == 3


def test_verify_identities(tmp_path, capsys):
    code = run(["verify-identities", "--config", _write(tmp_path, CL_CONFIG)])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["passed"] is True
    assert out["max_residual"] <= out["tolerance"]


def test_simulate_reproducible_modulo_metadata(tmp_path, capsys):
    cfg_path = _write(tmp_path, SIM_CONFIG)
    assert run(["simulate", "--config", cfg_path]) == 0
    first = _strip_metadata(capsys.readouterr().out)
    assert run(["simulate", "--config", cfg_path]) == 0
    second = _strip_metadata(capsys.readouterr().out)
    assert first == second


def test_simulate_seed_override_changes_output(tmp_path, capsys):
    cfg_path = _write(tmp_path, SIM_CONFIG)
    assert run(["simulate", "--config", cfg_path]) == 0
    base = _strip_metadata(capsys.readouterr().out)
    assert run(["simulate", "--config", cfg_path, "--seed", "99"]) == 0
    other = _strip_metadata(capsys.readouterr().out)
    assert base != other


def test_bad_grid_spec(tmp_path):
    assert run(["scale-eval", "--config", _write(tmp_path, CL_CONFIG),
                "--grid", "nonsense"]) == 1
    with pytest.raises(Exception):
        _parse_grid("5:1:10")


def test_thread_cap_env(tmp_path, monkeypatch):
    monkeypatch.setenv("LBL_THREADS", "not-a-number")
    assert run(["solve", "--config", _write(tmp_path, CL_CONFIG)]) == 1
    monkeypatch.setenv("LBL_THREADS", "0")
    assert run(["solve", "--config", _write(tmp_path, CL_CONFIG)]) == 1
    monkeypatch.setenv("LBL_THREADS", "2")
    assert run(["solve", "--config", _write(tmp_path, CL_CONFIG)]) == 0


def test_unknown_simulation_key(tmp_path):
    cfg = dict(SIM_CONFIG, simulation={"dt": 0.001, "n_paths": 500,
                                       "seed": 3, "threads": 4})
    assert run(["simulate", "--config", _write(tmp_path, cfg)]) == 1
