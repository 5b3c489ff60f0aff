import csv
import io
import json

import pytest

from sgisim import cli, output
from sgisim.experiments import Table


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def body(text):
    # drop the timestamp line, keep everything else
    lines = text.splitlines()
    assert lines[0].startswith("# generated:")
    return "\n".join(lines[1:])


def test_run_default_summary(capsys):
    code, out, _ = run(["run", "--set", "numerics.steps_per_pulse=200"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == output.SCHEMA_VERSION
    assert doc["summary"]["libration_frequency_hz"] == pytest.approx(2860, rel=1e-3)
    assert doc["units"]["libration_frequency_hz"] == "Hz"
    assert doc["config"]["field"]["b0"] == "0.001 T"


def test_run_identical_arms(capsys):
    code, out, _ = run(["run", "--spin-arm1", "0,0,0", "--spin-arm2", "0,0,0", "--set", "numerics.steps_per_pulse=200"], capsys)
    assert code == 0
    assert json.loads(out)["summary"]["delta_phi"] == 0.0


def test_run_quadratic_ramp(capsys):
    code, out, _ = run(["run", "--ramp", "quadratic", "--set", "numerics.steps_per_pulse=200"], capsys)
    assert code == 0
    assert abs(json.loads(out)["summary"]["delta_phi"]) < 1e-6


def test_run_writes_trajectory(tmp_path, capsys):
    traj = tmp_path / "traj.csv"
    code, _, _ = run(["run", "--trajectory", str(traj), "--format", "csv", "--set", "numerics.steps_per_pulse=100"], capsys)
    assert code == 0
    text = traj.read_text()
    assert "# config:" in text
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    assert rows[0][:3] == ["arm", "t [s]", "x [m]"]


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--set", 'field.b0="10 X"'],
        ["run", "--set", "field.nope=1"],
        ["run", "--spin-arm1", "0,2,0"],
        ["run", "--config", "/nonexistent.toml"],
        ["sweep", "fig7", "--var", "b0", "--min", "10 nm", "--max", "20 G"],
        ["sweep", "fig7", "--var", "d"],
        ["sweep", "fig7", "--points", "1"],
        ["sweep", "fig7", "--series", "bogus=1,2"],
    ],
)
def test_config_errors_exit_2(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == cli.EXIT_CONFIG
    assert "configuration error" in err


def test_config_file_line_diagnostic(tmp_path, capsys):
    p = tmp_path / "bad.toml"
    p.write_text('[field]\nb0 = "10 G"\nb_grad = \n')
    code, _, err = run(["run", "--config", str(p)], capsys)
    assert code == cli.EXIT_CONFIG
    assert "line 3" in err


@pytest.mark.parametrize(
    "argv, stage",
    [
        (["run", "--set", "numerics.steps_per_pulse=1"], "StepSizeError"),
        (["run", "--ramp", "quadratic", "--set", 'field.b0="0.5 G"', "--set", 'environment.g_xi="9.8 m/s^2"'], "RampError"),
    ],
)
def test_numerical_failure_exit_3(argv, stage, capsys):
    code, _, err = run(argv, capsys)
    assert code == cli.EXIT_NUMERICAL
    assert "run_sgi" in err and stage in err


def test_sweep_csv_format(tmp_path, capsys):
    out = tmp_path / "f5.csv"
    code, _, _ = run(["sweep", "fig5", "--points", "8", "--out", str(out)], capsys)
    assert code == 0
    text = out.read_bytes().decode()
    assert "\r\n" in text
    lines = text.split("\r\n")
    assert any(line.startswith("# config: {") for line in lines)
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    assert rows[0][0] == "omega_t [1]"
    assert len(rows) == 9
    # 17 significant digits
    assert len(rows[1][0].replace(".", "").lstrip("0")) >= 15


def test_sweep_deterministic_and_thread_invariant(tmp_path, capsys):
    argv = ["sweep", "fig8", "--points", "5", "--no-series", "--set", "numerics.steps_per_pulse=100"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(argv + ["--out", str(a)], capsys)[0] == 0
    assert run(argv + ["--out", str(b), "--threads", "2"], capsys)[0] == 0
    assert body(a.read_text()) == body(b.read_text())


def test_sweep_custom_variable_and_series(capsys):
    code, out, _ = run(
        ["sweep", "fig7", "--var", "b0", "--min", "5 G", "--max", "10 G", "--points", "2", "--series", "d=0 nm,2 nm", "--format", "json",
         "--set", "numerics.steps_per_pulse=100"],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    assert [c["name"] for c in doc["columns"][:2]] == ["b0", "d"]
    assert len(doc["rows"]) == 4
    assert doc["sweep"]["min"] == pytest.approx(5e-4)
    assert doc["config"]["numerics"]["steps_per_pulse"] == 100


def test_sweep_theta0_accepts_pi_forms(capsys):
    code, out, _ = run(
        ["sweep", "fig4", "--min=-pi/8", "--max", "pi/8", "--points", "2", "--no-series", "--format", "json"], capsys
    )
    assert code == 0
    assert json.loads(out)["sweep"]["max"] == pytest.approx(0.39269908169872414)


def test_sweep_list(capsys):
    code, out, _ = run(["sweep", "--list"], capsys)
    assert code == 0
    assert out.splitlines()[0].startswith("fig3")
    assert len(out.splitlines()) == 8


def test_seed_flag_recorded(capsys):
    code, out, _ = run(["sweep", "fig6", "--points", "2", "--seed", "7", "--set", "numerics.mc_samples=10000", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["seed"] == 7 and doc["config"]["numerics"]["seed"] == 7


def test_validate_quick(capsys):
    code, out, _ = run(["validate", "--quick"], capsys)
    assert code == 0
    assert out.count("PASS") == 7


def test_validate_fails_on_sign_flip(monkeypatch, capsys):
    from sgisim import geometry

    orig = geometry.dbpar_dtheta
    monkeypatch.setattr(geometry, "dbpar_dtheta", lambda *a, **k: -orig(*a, **k))
    code, out, _ = run(["validate", "--quick"], capsys)
    assert code == cli.EXIT_VALIDATION
    assert "FAIL  torque vs finite difference" in out


def test_csv_quoting():
    text = output.to_csv_string(Table([("s", "")], [['a, "b"']]), {})
    assert '"a, ""b"""' in text
