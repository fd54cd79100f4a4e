import json
import shutil
import subprocess

import numpy as np
import pytest

from robust_levy import ConfigError
from robust_levy.cli import execute, load_schema, main, validate

SOLVE = {
    "kind": "solve", "solver": "combined", "alpha": 1.5,
    "box": {"atoms": [{"dir": -1, "lo": 0.75, "hi": 1.0}, {"dir": 1, "lo": 0.75, "hi": 1.0}],
            "q": [-0.5, 0.5], "Q": [0.25, 1.0]},
    "phi": {"form": "cos"}, "T": 0.25,
    "scheme": {"steps": [0.1], "half_widths": [10.0]},
    "outputs": {"json": "out/solve.json", "csv": "out/solve.csv"},
}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg), encoding="utf-8")
    return str(p)


def test_dry_run_writes_nothing(tmp_path):
    assert main([_write(tmp_path, SOLVE), "--dry-run"]) == 0
    assert not (tmp_path / "out").exists()


def test_solve_writes_outputs_and_probes(tmp_path):
    assert main([_write(tmp_path, SOLVE), "--probe", "0.25,0.0", "--probe", "0,1.0"]) == 0
    rep = json.loads((tmp_path / "out/solve.json").read_text())
    probes = rep["tables"]["probes"]["rows"]
    assert probes[1][4] == pytest.approx(np.cos(1.0), abs=1e-15)
    assert 0 < probes[0][4] < 1
    assert "wall_clock" not in rep
    text = (tmp_path / "out/solve.csv").read_text()
    assert text.startswith("# experiment=solve\n") and "\r" not in text


def test_zero_horizon_solve_equals_sampled_phi(tmp_path):
    assert main([_write(tmp_path, dict(SOLVE, T=0.0))]) == 0
    rows = json.loads((tmp_path / "out/solve.json").read_text())["tables"]["solution"]["rows"]
    xs, vs = np.array(rows).T
    assert len(xs) == 201
    np.testing.assert_array_equal(vs, np.cos(xs))


def test_threads_do_not_change_bytes(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    cfg = dict(SOLVE, solver="triple", T=0.1,
               scheme={"steps": [0.25, 0.25, 0.25], "half_widths": [2.0, 1.0, 4.0]},
               phi={"product": [{"form": "cos"}, {"form": "cos"}, {"form": "cos"}]})
    assert main([_write(a, cfg), "--threads", "1"]) == 0
    assert main([_write(b, cfg), "--threads", "8"]) == 0
    assert (a / "out/solve.csv").read_bytes() == (b / "out/solve.csv").read_bytes()
    assert (a / "out/solve.json").read_bytes() == (b / "out/solve.json").read_bytes()


def test_config_errors_exit_2(tmp_path):
    assert main([_write(tmp_path, {"kind": "nope"})]) == 2
    bad_iv = json.loads(json.dumps(SOLVE))
    bad_iv["box"]["q"] = [1.0, -1.0]
    assert main([_write(tmp_path, bad_iv)]) == 2
    assert main([_write(tmp_path, dict(SOLVE, extra=1))]) == 2
    assert main([str(tmp_path / "missing.json")]) == 2
    assert main([_write(tmp_path, SOLVE), "--probe", "abc"]) == 2
    assert main([_write(tmp_path, {"kind": "scaling"}), "--probe", "0,0"]) == 2


def test_cfl_violation_exits_3(tmp_path):
    cfg = dict(SOLVE, scheme={"steps": [0.05], "half_widths": [20.0], "dt": 0.5})
    assert main([_write(tmp_path, cfg)]) == 3


def test_failed_verdict_exits_1(tmp_path):
    cfg = {"kind": "audit", "audit": "measure-oracles", "params": {"n_instances": 3,
                                                                    "rtol": 1e-300}}
    assert main([_write(tmp_path, cfg)]) == 1
    cfg["params"]["rtol"] = 1e-8
    assert main([_write(tmp_path, cfg)]) == 0


def test_validate_reports_path():
    with pytest.raises(ConfigError, match="alpha"):
        validate(dict(SOLVE, alpha=2.5))
    with pytest.raises(ConfigError, match="audit"):
        validate({"kind": "audit"})


def test_schema_ships_with_package():
    schema = load_schema()
    assert schema["properties"]["kind"]["enum"][0] == "solve"


def test_execute_returns_report():
    rep = execute(dict(SOLVE, T=0.0))
    assert rep.experiment == "solve" and rep.passed
    assert set(rep.tables) == {"solution", "probes", "run"}


@pytest.mark.skipif(shutil.which("robust-levy") is None, reason="console script not installed")
def test_console_script(tmp_path):
    out = subprocess.run(["robust-levy", _write(tmp_path, SOLVE), "--dry-run"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    out = subprocess.run(["robust-levy", _write(tmp_path, {"kind": "nope"})],
                         capture_output=True, text=True)
    assert out.returncode == 2 and "config error" in out.stderr
