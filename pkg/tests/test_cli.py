import json
import subprocess
import sys

import numpy as np
import pytest

from equip import build_family
from equip.cli import build_parser, main, parse_and_dispatch
from equip.errors import IntegrationError
from equip.integrator import SolverConfig


def run(argv, capsys):
    code = parse_and_dispatch(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config: ")
    config = json.loads(lines[0][len("# config: "):])
    header = lines[1].split(",")
    rows = [[float(v) for v in line.split(",")] for line in lines[2:]]
    return config, header, rows


def test_integrate_csv_example(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code, stdout, _ = run(
        ["integrate", "--problem", "pendulum", "--s", "2", "--mode", "equip", "--h", "0.1", "--steps", "1000",
         "--y0", "0,1", "--out", str(out)],
        capsys,
    )
    assert code == 0 and stdout == ""
    config, header, rows = read_csv(out)
    assert header == ["k", "t", "energy_err", "alpha", "q1", "p1"]
    assert len(rows) == 1001
    assert config["mode"] == "equip" and config["max_halvings"] == 3
    assert max(abs(r[2]) for r in rows) <= 1e-11
    assert rows[-1][0] == 1000 and rows[-1][1] == pytest.approx(100.0)


def test_missing_alpha_is_usage_error(capsys):
    code, _, err = run(["integrate", "--mode", "fixed-alpha", "--s", "2", "--h", "0.1", "--steps", "10"], capsys)
    assert code == 2
    assert "--alpha" in err


def test_alpha_outside_fixed_mode_is_usage_error(capsys):
    code, _, err = run(["integrate", "--mode", "gauss", "--alpha", "0.1", "--h", "0.1", "--steps", "10"], capsys)
    assert code == 2 and "--alpha" in err


def test_tableau_example(capsys):
    code, stdout, _ = run(["tableau", "--s", "2", "--alpha", "0.1"], capsys)
    assert code == 0
    d = json.loads(stdout)
    assert {"c", "b", "A"} <= set(d)
    dA = build_family(2).dA
    assert d["A"][0][0] == pytest.approx(0.25 + 0.1 * dA[0, 0], abs=1e-16)
    np.testing.assert_allclose(d["b"], [0.5, 0.5])


def test_tableau_midpoint_and_rejects_s1_alpha(capsys):
    code, stdout, _ = run(["tableau", "--s", "1"], capsys)
    assert code == 0 and json.loads(stdout)["A"] == [[0.5]]
    code, _, err = run(["tableau", "--s", "1", "--alpha", "0.1"], capsys)
    assert code == 2 and "s >= 2" in err


def test_json_schema(tmp_path, capsys):
    out = tmp_path / "run.json"
    code, _, _ = run(["integrate", "--problem", "kepler", "--h", "0.05", "--steps", "20", "--out", str(out)], capsys)
    assert code == 0
    d = json.loads(out.read_text())
    assert set(d) == {"config", "columns", "rows"}
    assert d["columns"] == ["k", "t", "energy_err", "alpha", "angular_momentum", "q1", "q2", "p1", "p2"]
    assert len(d["rows"]) == 21
    # alpha is undefined for the initial state
    assert d["rows"][0][3] is None


def test_output_is_byte_stable(tmp_path, capsys):
    argv = ["integrate", "--problem", "henon_heiles", "--s", "3", "--mode", "equip", "--h", "0.1", "--steps", "50",
            "--seed", "7"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(argv + ["--out", str(a)], capsys)[0] == 0
    assert run(argv + ["--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_floats_round_trip(tmp_path, capsys):
    out = tmp_path / "r.csv"
    run(["integrate", "--h", "0.1", "--steps", "3", "--out", str(out)], capsys)
    _, _, rows = read_csv(out)
    from equip import get_problem, integrate

    traj = integrate(get_problem("pendulum"), build_family(2), (0.0, 1.0), 0.1, 3, "gauss")
    assert [r[4:] for r in rows] == traj.y.tolist()


def test_wrong_y0_length(capsys):
    code, _, err = run(["integrate", "--problem", "kepler", "--h", "0.1", "--steps", "5", "--y0", "1,0"], capsys)
    assert code == 2 and "4 values" in err


def test_unknown_problem(capsys):
    code, _, err = run(["integrate", "--problem", "lorenz", "--h", "0.1", "--steps", "5"], capsys)
    assert code == 2 and "lorenz" in err


def test_numerical_failure_exit_1(tmp_path, capsys):
    out = tmp_path / "partial.csv"
    code, _, err = run(
        ["integrate", "--mode", "equip", "--h", "0.1", "--steps", "1000", "--max-halvings", "0", "--out", str(out)],
        capsys,
    )
    assert code == 1
    diag = json.loads(err)
    assert diag["error"] == "IntegrationError"
    assert len(diag["probes"]) > 2 and diag["accepted_steps"] > 0
    config, _, rows = read_csv(out)
    assert config["partial"] is True and len(rows) == diag["accepted_steps"] + 1


def test_drift_json_and_text(capsys):
    code, stdout, _ = run(["drift", "--problem", "kepler", "--mode", "equip", "--h", "0.05", "--steps", "200"], capsys)
    assert code == 0
    res = json.loads(stdout)["result"]
    assert res["max_energy_drift"] <= 1e-10 and res["max_invariant_drift"]["angular_momentum"] <= 1e-10
    code, stdout, _ = run(["drift", "--h", "0.1", "--steps", "10", "--format", "text"], capsys)
    assert code == 0 and "max |drift|" in stdout


def test_converge(capsys):
    code, stdout, _ = run(["converge", "--problem", "pendulum", "--mode", "fixed-alpha", "--alpha", "0.05",
                           "--y0", "0.5,1.9", "--jobs", "2"], capsys)
    assert code == 0
    res = json.loads(stdout)["result"]
    assert 1.7 <= res["slope"] <= 2.3 and res["h"] == [0.2, 0.1, 0.05, 0.025]


def test_converge_bad_grid_is_usage_error(capsys):
    code, _, err = run(["converge", "--h-list", "0.2,0.1"], capsys)
    assert code == 2 and "at least 4" in err


def test_alpha_scaling(capsys):
    code, stdout, _ = run(["alpha-scaling", "--problem", "pendulum", "--y0", "0,1"], capsys)
    assert code == 0
    res = json.loads(stdout)["result"]
    assert res["energy_tol"] == 1e-15
    assert all(3.3 <= r <= 4.7 for r in res["ratios"])


def test_help_shows_solver_defaults():
    text = " ".join(build_parser()._subparsers._group_actions[0].choices["integrate"].format_help().split())
    cfg = SolverConfig()
    for flag, value in [("--stage-tol", cfg.stage_tol), ("--energy-tol", cfg.energy_tol), ("--alpha-max", cfg.alpha_max)]:
        assert flag in text and f"default: {value}" in text


def test_logs_go_to_stderr(monkeypatch, capsys):
    monkeypatch.setenv("EQUIP_LOG", "debug")
    code = main(["integrate", "--mode", "equip", "--h", "0.1", "--steps", "40"])
    out = capsys.readouterr()
    assert code == 0
    assert out.out.startswith("# config: ")


def test_console_script(tmp_path):
    res = subprocess.run([sys.executable, "-m", "equip", "tableau", "--s", "3"], capture_output=True, text=True)
    assert res.returncode == 0
    assert len(json.loads(res.stdout)["A"]) == 3
