import csv
import json

import numpy as np
import pytest

from qcflow import parallel
from qcflow.cli import load_config, load_field, main
from qcflow.errors import ConfigError
from qcflow.gridio import read_grid_function, write_field_grid, write_grid_function
from qcflow.spaces import GridFunction


def write_config(tmp_path, scenarios, **extra):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 7, "scenarios": scenarios, **extra}))
    return path


FLOW = {"name": "rot", "operation": "flow", "field": "rotation",
        "params": {"t": 1.0, "seeds": {"lattice": {"lo": [-1, -1], "hi": [1, 1], "counts": 3}}, "nodes": 3}}
DIST = {"name": "sh", "operation": "distortion", "field": "shear", "params": {"t": 1.0, "points": [[0.3, -0.2]]}}
TRANS = {"name": "tr", "operation": "transport", "field": {"builtin": "rotation", "T": 2.0},
         "params": {"times": [0.0, 0.5], "u0": "gaussian", "seminorms": ["bmo", "w1n"],
                    "grid": {"lo": [-1, -1], "hi": [1, 1], "resolution": 32},
                    "test_function": {"center": [0.0, 0.0], "radius": 0.5}}}
SPACES = {"name": "sp", "operation": "spaces", "field": "shear",
          "params": {"u": "log_abs", "grid": {"lo": [-1, -1], "hi": [1, 1], "resolution": [32, 64]}, "flow_t": 0.5}}
VORT = {"name": "vo", "operation": "vorticity",
        "params": {"omega0": {"kind": "gaussians", "sigma": 0.3}, "dt": 0.01, "steps": 2,
                   "grid": {"lo": [-2.5, -2.5], "hi": [2.5, 2.5], "resolution": 32}}}


def run(tmp_path, scenarios, *args, out="out", **extra):
    cfg = write_config(tmp_path, scenarios, **extra)
    return main(["--config", str(cfg), "--out", str(tmp_path / out), *args])


def test_all_operations_pass(tmp_path, capsys):
    assert run(tmp_path, [FLOW, DIST, TRANS, SPACES, VORT]) == 0
    assert capsys.readouterr().out.count("[PASS]") == 5
    m = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert {"tool", "version", "config_sha256", "seed", "tolerances", "scenarios"} <= set(m)
    assert m["seed"] == 7
    for e in m["scenarios"]:
        for a in e["artifacts"]:
            assert (tmp_path / "out" / a).exists()
    tr = next(e for e in m["scenarios"] if e["name"] == "tr")
    assert "weak_residual" in tr["summary"]


def test_trajectory_csv_header(tmp_path):
    assert run(tmp_path, [FLOW]) == 0
    with open(tmp_path / "out" / "rot" / "trajectories.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["seed_id", "t", "x_1", "x_2", "M_11", "M_12", "M_21", "M_22", "detM"]
    assert len(rows) == 1 + 9 * 3
    assert float(rows[-1][-1]) == pytest.approx(1.0, abs=1e-8)


def test_runs_are_byte_identical(tmp_path):
    rnd = {**FLOW, "params": {"t": 1.0, "seeds": {"random": {"lo": [-1, -1], "hi": [1, 1], "count": 5}}}}
    assert run(tmp_path, [rnd, DIST], out="a") == 0
    assert run(tmp_path, [rnd, DIST], out="b") == 0
    for name in ("manifest.json", "rot/trajectories.csv", "sh/distortion.json", "sh/distortion.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert run(tmp_path, [rnd], "--seed", "8", out="c") == 0
    assert (tmp_path / "a/rot/trajectories.csv").read_bytes() != (tmp_path / "c/rot/trajectories.csv").read_bytes()


def test_empty_scenario_list(tmp_path):
    assert run(tmp_path, []) == 0
    assert json.loads((tmp_path / "out" / "manifest.json").read_text())["scenarios"] == []


def test_failing_scenario_exits_one(tmp_path):
    strict = {**FLOW, "params": {**FLOW["params"], "inverse_tol": 1e-300}}
    assert run(tmp_path, [strict, DIST]) == 1
    m = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert [e["passed"] for e in m["scenarios"]] == [False, True]


@pytest.mark.parametrize("bad", [
    {**FLOW, "params": {**FLOW["params"], "t": 3.0}, "field": {"builtin": "rotation", "T": 2.0}},
    {**FLOW, "operation": "teleport"},
    {"name": "x", "operation": "flow"},
    {**FLOW, "field": "vortex_street"},
    {**FLOW, "params": {"t": 1.0, "seeds": [[1.0, 2.0, 3.0]]}},
    {**DIST, "params": {**DIST["params"], "tol": -1}},
    {**FLOW, "params": {**FLOW["params"], "inverse_tol": 0}},
    {**TRANS, "params": {**TRANS["params"], "u0": "sawtooth"}},
    {**VORT, "params": {**VORT["params"], "omega0": "nowhere.qcg"}},
])
def test_config_errors_exit_two(tmp_path, bad, capsys):
    assert run(tmp_path, [bad]) == 2
    assert "config error" in capsys.readouterr().err


def test_parse_error_reports_position(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{"scenarios": [\n  {"name": "x",, }]}')
    with pytest.raises(ConfigError, match=r"cfg.json:2:\d+"):
        load_config(path)
    assert main(["--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert main(["--config", str(tmp_path / "missing.json")]) == 2
    assert not (tmp_path / "o").exists()


def test_bad_tolerances(tmp_path):
    assert run(tmp_path, [FLOW], tolerances={"integrator": 0}) == 2


def test_numeric_failure_exits_three(tmp_path, capsys):
    write_field_grid(tmp_path / "b.qcf", np.ones((1, 8, 8, 2)), (0, 0), (1, 1), (0.0, 2.0))
    esc = {"name": "esc", "operation": "flow", "field": "b.qcf", "params": {"t": 1.0, "seeds": [[0.5, 0.5]]}}
    assert run(tmp_path, [esc]) == 3
    assert "numeric error" in capsys.readouterr().err


def test_field_descriptors(tmp_path):
    (tmp_path / "f.json").write_text(json.dumps({"builtin": "disc_vortex", "params": {"strength": 2.0}, "T": 3}))
    f = load_field("f.json", tmp_path)
    assert f.T == 3.0 and f(0.0, [[0.5, 0.0]])[0, 1] == pytest.approx(0.5)
    with pytest.raises(ConfigError):
        load_field({"builtin": "shear", "T": -1})
    with pytest.raises(ConfigError):
        load_field("absent.qcf", tmp_path)


def test_no_command_prints_help(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_suite_filter(tmp_path, capsys):
    assert main(["--suite", "--filter", "conformal,4", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "conformal" in out and "jacobian" in out and "2/2 passed" in out
    data = json.loads((tmp_path / "acceptance.json").read_text())
    assert [c["number"] for c in data["criteria"]] == [2, 4]
    assert main(["--suite", "--filter", "nonsense"]) == 2


def test_suite_loosened_tolerance_fails(tmp_path):
    assert main(["--suite", "--filter", "inverse_flow", "--tol-factor", "1e4", "--out", str(tmp_path)]) == 1


def test_solve_subcommand(tmp_path):
    out = tmp_path / "s"
    assert main(["solve", "--field", "rotation", "--u0", "gaussian", "--times", "0,0.5", "--resolution", "32",
                 "--out", str(out)]) == 0
    assert read_grid_function(out / "u_001.qcg").resolution == (32, 32)
    u = GridFunction.from_function(lambda X: X[:, 0], (-1, -1), (1, 1), 16)
    write_grid_function(tmp_path / "u.qcg", u)
    assert main(["solve", "--field", "zero", "--u0", str(tmp_path / "u.qcg"), "--times", "0,1", "--seminorms", "w1n",
                 "--out", str(out)]) == 0
    assert main(["solve", "--field", "zero", "--u0", "gaussian", "--times", "0,1", "--box", "1,2,3",
                 "--out", str(out)]) == 2


def test_vorticity_subcommand(tmp_path):
    out = tmp_path / "v"
    assert main(["vorticity", "--omega0", "disc", "--dt", "0.01", "--steps", "3", "--resolution", "32",
                 "--out", str(out)]) == 0
    assert sorted(p.name for p in out.glob("omega_*.qcg")) == [f"omega_{k:04d}.qcg" for k in range(4)]
    with open(out / "diagnostics.csv") as fh:
        assert next(csv.reader(fh)) == ["t", "circulation", "max_abs_omega", "bmo"]
    assert main(["vorticity", "--omega0", "disc", "--dt", "5", "--steps", "1", "--resolution", "32",
                 "--out", str(out)]) == 3


def test_thread_count_sources(monkeypatch):
    monkeypatch.setattr(parallel, "_threads", None)
    monkeypatch.setenv("QCFLOW_THREADS", "3")
    assert parallel.threads() == 3
    monkeypatch.setenv("QCFLOW_THREADS", "junk")
    assert parallel.threads() == 1
    parallel.set_threads(2)
    assert parallel.threads() == 2
    with pytest.raises(ValueError):
        parallel.set_threads(0)
    assert main(["--threads", "0"]) == 2


def test_chunked_map_is_thread_invariant(monkeypatch):
    X = np.random.default_rng(0).normal(size=(1000, 2))
    fn = lambda B, off: np.sin(B) + off
    monkeypatch.setattr(parallel, "_threads", 1)
    one = parallel.map_chunks(fn, X, chunk=64)
    monkeypatch.setattr(parallel, "_threads", 4)
    assert np.array_equal(parallel.map_chunks(fn, X, chunk=64), one)
