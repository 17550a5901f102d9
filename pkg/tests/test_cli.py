import json

import numpy as np
import pytest
import yaml

from gradedpsi.cli import TASKS, main, validate_config
from gradedpsi.errors import ConfigurationError
from gradedpsi.serialization import read_columns, read_symbol

HEIS = {"group": "heisenberg", "lambda_min": 0.25, "lambda_max": 1.0, "n_lambda": 4,
        "hermite_dim": 4}
ABEL = {"group": "abelian", "n": 1, "xi_max": 16.0, "n_xi": 33}
H1 = {"multiplier": {"name": "poly", "coeffs": [1, 1]}, "order": 2}

SCENARIOS = {
    "seminorm": (ABEL, {"symbol": H1, "alpha": [1], "beta": [0]}),
    "class-check": (ABEL, {"symbol": H1, "m": 2, "k_max": 1}),
    "resolvent": (HEIS, {"symbol": H1, "lambda": [-1.0, 0.5]}),
    "param-elliptic": (HEIS, {"symbol": H1, "k": 1,
                              "curve": {"kind": "ray_pair", "theta": 0.5, "lo": 0.1, "hi": 100,
                                        "per_decade": 4}}),
    "parametrix": ({"group": "abelian", "n": 1, "xi_max": 32.0, "n_xi": 65},
                   {"symbol": dict(H1, x_factor={"c0": 2, "c1": 1}, n_x=64), "N": 1,
                    "cutoffs": [4, 8, 16]}),
    "funcalc": (HEIS, {"symbol": H1, "function": {"name": "inv_sqrt"}}),
    "power": (HEIS, {"symbol": dict(H1, perturbation={"scale": 0.3}), "s": [0.5, 0.25]}),
    "garding": (ABEL, {"symbol": dict(H1, x_factor={"c0": 2, "c1": 1}, n_x=32), "m": 2,
                       "C0": 0.5, "C1": 0.25, "trials": 10}),
    "interpolate": (HEIS, {"s": 1.0, "t": 0.5, "eps": 0.25}),
    "diffuse": (ABEL, {"K": {"multiplier": {"name": "poly", "coeffs": [0, -1]}, "order": 2,
                             "x_factor": {"c0": 1.5, "c1": 0.5}, "n_x": 32},
                       "data": {"kind": "cell", "mode": "sin", "k": 2}, "T": 0.2,
                       "n_steps": 5}),
}


def _write(path, cfg):
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


@pytest.fixture
def run(tmp_path):
    def _run(cfg, *extra, command="run"):
        path = _write(tmp_path / "cfg.yaml", cfg)
        out = tmp_path / "out"
        code = main([command, "--config", path, "--output", str(out), *extra])
        return code, out
    return _run


def test_all_tasks_have_scenarios():
    assert set(SCENARIOS) == set(TASKS)


@pytest.mark.parametrize("task", sorted(SCENARIOS))
def test_task_runs(run, task):
    backend, params = SCENARIOS[task]
    code, out = run({"backend": backend, "task": task, "params": params, "seed": 1})
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    manifest = json.loads((out / "manifest.json").read_text())
    assert report["task"] == task and report["seed"] == 1
    assert set(report["files"]) | {"report.json"} == set(manifest["files"])
    assert manifest["kernel_implementation"] in ("cython", "python")
    assert "wall_time_s" in manifest and "wall_time_s" not in json.dumps(report)


def test_subcommand_sets_task(run):
    backend, params = SCENARIOS["interpolate"]
    code, out = run({"backend": backend, "params": params}, command="interpolate")
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert 0 < rep["result"]["C_eps"] <= 1.0
    cols = read_columns(out / "interpolation_modes.csv")
    assert np.all(cols["lhs"] <= cols["rhs"] + 1e-12)


def test_subcommand_task_mismatch(run, capsys):
    backend, params = SCENARIOS["interpolate"]
    code, _ = run({"backend": backend, "task": "interpolate", "params": params},
                  command="garding")
    assert code == 2
    assert "task" in capsys.readouterr().err


def test_outputs_parametrix_table(run):
    backend, params = SCENARIOS["parametrix"]
    code, out = run({"backend": backend, "task": "parametrix", "params": params})
    cols = read_columns(out / "parametrix_N1.csv")
    assert list(cols) == ["cutoff", "residual_norm"]
    assert np.all(np.diff(cols["residual_norm"]) < 0)


def test_outputs_symbol_file(run):
    backend, params = SCENARIOS["funcalc"]
    code, out = run({"backend": backend, "task": "funcalc", "params": params})
    sym = read_symbol(out / "result_symbol.csv")
    assert sym.order == -1.0
    rep = json.loads((out / "report.json").read_text())
    assert rep["result"]["oracle_relative_error"] < 1e-8


def test_diffuse_unit_mode_report(run):
    params = {"K": {"multiplier": {"name": "poly", "coeffs": [-1, -1]}, "order": 2},
              "data": {"kind": "unit_mode", "point_value": 1.0, "k": 1}, "T": 1.0, "n_steps": 4,
              "s": 1.0}
    code, out = run({"backend": HEIS, "task": "diffuse", "params": params})
    res = json.loads((out / "report.json").read_text())["result"]
    assert res["mode"]["final_coefficient"]["re"] == pytest.approx(np.exp(-4.0), rel=1e-12)
    assert res["energy"]["C"] == 1.0 and res["energy"]["C_prime"] == 0.0
    assert res["sobolev_energy"]["conjugation_residual"] < 1e-12
    cols = read_columns(out / "trace.csv")
    assert list(cols) == ["t", "l2_norm", "hs_norm"]


@pytest.mark.parametrize("mutate, key", [
    (lambda c: c["backend"].update(lambda_min=0), "backend.lambda_min"),
    (lambda c: c["backend"].update(colour="red"), "colour"),
    (lambda c: c["backend"].pop("n_lambda"), "n_lambda"),
    (lambda c: c.update(task="nonsense"), "task"),
    (lambda c: c["params"].update(eps=-1), "params.eps"),
    (lambda c: c["params"].update(extra=1), "extra"),
])
def test_schema_errors_exit_2(run, capsys, mutate, key):
    backend, params = SCENARIOS["interpolate"]
    cfg = {"backend": dict(backend), "task": "interpolate", "params": dict(params)}
    mutate(cfg)
    code, _ = run(cfg)
    assert code == 2
    assert key in capsys.readouterr().err


def test_cross_field_error_exit_2(run, capsys):
    cfg = {"backend": dict(HEIS, lambda_max=0.1), "task": "interpolate",
           "params": SCENARIOS["interpolate"][1]}
    assert run(cfg)[0] == 2
    assert "lambda_max" in capsys.readouterr().err


def test_bad_yaml_and_missing_config(tmp_path, monkeypatch):
    bad = tmp_path / "bad.yaml"
    bad.write_text("backend: [unclosed")
    assert main(["run", "--config", str(bad)]) == 2
    monkeypatch.delenv("GRADEDPSI_CONFIG", raising=False)
    assert main(["run"]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_numerical_failure_exit_3(run, capsys):
    params = {"symbol": {"multiplier": {"name": "poly", "coeffs": [-1, 1]}, "order": 2},
              "function": {"name": "inv"}}
    code, _ = run({"backend": HEIS, "task": "funcalc", "params": params})
    assert code == 3
    assert "ContourViolationError" in capsys.readouterr().err


def test_positivity_failure_exit_3(run):
    params = {"symbol": H1, "m": 2, "C0": 5.0}
    assert run({"backend": HEIS, "task": "garding", "params": params})[0] == 3


def test_unsupported_exit_4(run):
    params = {"symbol": dict(H1, x_factor={"c0": 2, "c1": 1}), "m": 2}
    assert run({"backend": HEIS, "task": "class-check", "params": params})[0] == 4


def test_env_and_flag_precedence(tmp_path, monkeypatch):
    backend, params = SCENARIOS["garding"]
    cfg = _write(tmp_path / "g.yaml", {"backend": backend, "task": "garding", "params": params,
                                       "seed": 1})
    monkeypatch.setenv("GRADEDPSI_CONFIG", cfg)
    monkeypatch.setenv("GRADEDPSI_OUTPUT", str(tmp_path / "env_out"))
    monkeypatch.setenv("GRADEDPSI_SEED", "5")
    monkeypatch.setenv("GRADEDPSI_THREADS", "1")
    assert main(["garding"]) == 0
    rep = json.loads((tmp_path / "env_out" / "report.json").read_text())
    man = json.loads((tmp_path / "env_out" / "manifest.json").read_text())
    assert rep["seed"] == 5 and man["threads"] == 1
    assert main(["garding", "--seed", "7", "--output", str(tmp_path / "flag_out")]) == 0
    rep = json.loads((tmp_path / "flag_out" / "report.json").read_text())
    assert rep["seed"] == 7


def test_bad_env_value(tmp_path, monkeypatch):
    backend, params = SCENARIOS["interpolate"]
    cfg = _write(tmp_path / "i.yaml", {"backend": backend, "task": "interpolate", "params": params})
    monkeypatch.setenv("GRADEDPSI_SEED", "abc")
    assert main(["run", "--config", cfg, "--output", str(tmp_path / "o")]) == 2


def test_seed_changes_random_results(run, tmp_path):
    backend, params = SCENARIOS["garding"]
    cfg = {"backend": backend, "task": "garding", "params": params}
    _, out = run(cfg, "--seed", "1")
    first = (out / "garding_trials.csv").read_text()
    _, out = run(cfg, "--seed", "2")
    assert (out / "garding_trials.csv").read_text() != first


def test_validate_config_direct():
    with pytest.raises(ConfigurationError, match="backend"):
        validate_config({"task": "interpolate"})


def test_example_garding_classical(run):
    backend = {"group": "abelian", "n": 1, "xi_max": 20.0, "n_xi": 161}
    params = {"symbol": H1, "m": 2, "C0": 1.0, "C1": 1.0}
    code, out = run({"backend": backend, "task": "garding", "params": params})
    res = json.loads((out / "report.json").read_text())["result"]
    assert code == 0
    assert res["C1"] == 1.0 and res["C2"] == 0.0 and res["margin"] >= -1e-9


def test_example_single_mode_decay(run):
    params = {"K": {"multiplier": {"name": "poly", "coeffs": [-1, -1]}, "order": 2},
              "data": {"kind": "unit_mode", "point_value": 1.0, "k": 0, "coefficient": 0.7},
              "T": 1.0, "n_steps": 10}
    code, out = run({"backend": HEIS, "task": "diffuse", "params": params})
    cols = read_columns(out / "mode_coefficient.csv")
    assert code == 0 and cols["t"][-1] == 1.0
    assert abs(cols["re"][-1] - 0.7 * np.exp(-2.0)) < 1e-10


def test_columns_have_enough_digits(run):
    backend, params = SCENARIOS["param-elliptic"]
    _, out = run({"backend": backend, "task": "param-elliptic", "params": params})
    lines = (out / "resolvent_sweep.csv").read_text().splitlines()
    assert lines[0] == "lambda_abs,sup_value"
    mantissa = lines[1].split(",")[0].split("e")[0].replace("-", "").replace(".", "")
    assert len(mantissa) >= 12


def test_manifest_reproduces_report(run, tmp_path):
    backend, params = SCENARIOS["garding"]
    code, out = run({"backend": backend, "task": "garding", "params": params}, "--seed", "4")
    manifest = json.loads((out / "manifest.json").read_text())
    cfg = dict(manifest["config"], seed=manifest["seed"])
    path = _write(tmp_path / "again.yaml", cfg)
    assert main(["run", "--config", path, "--output", str(tmp_path / "again")]) == 0
    assert (tmp_path / "again" / "report.json").read_bytes() == (out / "report.json").read_bytes()


def test_io_error_exit_1(tmp_path, capsys):
    backend, params = SCENARIOS["interpolate"]
    cfg = _write(tmp_path / "i.yaml", {"backend": backend, "task": "interpolate", "params": params})
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--config", cfg, "--output", str(blocker / "sub")]) == 1
    assert "error [" in capsys.readouterr().err
