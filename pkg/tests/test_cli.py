import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from twophoton import cli
from twophoton.errors import IllConditionedDerivative
from twophoton.measurement import PhotonCounting
from twophoton.params import SystemParams, VACUUM
from twophoton.precision import optimal_drive_scan


@pytest.fixture(autouse=True)
def serial_workers(monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "1")


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_coeffs_damped_rotation(capsys):
    code, out, _ = run(capsys, "coeffs", "--omega", "1", "--lambda", "0", "--gamma", "0.5", "--t", "0:2:5")
    assert code == 0
    rows = table(out)
    assert [float(r["t"]) for r in rows] == [0.0, 0.5, 1.0, 1.5, 2.0]
    for r in rows:
        t = float(r["t"])
        assert abs(complex(float(r["re_G"]), float(r["im_G"]))) == pytest.approx(math.exp(-0.5 * t), rel=1e-14)
        assert float(r["symplectic_defect"]) <= 1e-8
    first = rows[0]
    assert (first["re_G"], first["im_G"], first["re_L"], first["im_L"], first["symplectic_defect"]) == (
        "1", "0", "0", "0", "0")


def test_coeffs_oracle_columns(capsys):
    code, out, _ = run(capsys, "coeffs", "--omega", "1", "--lambda", "1", "--gamma", "1", "--t", "1:3:3",
                       "--oracle", "--nb", "400")
    assert code == 0
    rows = table(out)
    for r in rows:
        G = complex(float(r["re_G"]), float(r["im_G"]))
        Go = complex(float(r["re_G_oracle"]), float(r["im_G_oracle"]))
        assert float(r["abs_dG"]) == pytest.approx(abs(G - Go), rel=1e-12)
        assert abs(G - Go) < 0.1 * abs(G)


def test_numbers_have_seventeen_digits():
    assert cli.fmt(0.1) == "0.10000000000000001"
    assert cli.fmt(math.inf) == "inf"
    assert cli.fmt(math.nan) == "nan"
    assert cli.fmt(True) == "true"
    assert float(cli.fmt(math.pi)) == math.pi


def test_sweep_without_drive_reports_inf(capsys):
    code, out, _ = run(capsys, "sweep", "--omega", "1", "--lambda", "0", "--gamma", "1", "--t", "30",
                       "--pipeline", "both")
    assert code == 0
    (row,) = table(out)
    assert row["delta_omega_sq_full"] == "inf"
    assert row["delta_omega_sq_asymptotic"] == "inf"
    assert row["formula"] == "small-photon"
    assert row["regime"] == "small"


def test_sweep_reference_point(capsys):
    code, out, _ = run(capsys, "sweep", "--omega", "1", "--lambda", "1", "--gamma", "1", "--t", "30")
    (row,) = table(out)
    assert float(row["delta_omega_sq_full"]) == pytest.approx(1.25, rel=1e-6)
    assert float(row["photon_number"]) == pytest.approx(0.5, rel=1e-9)
    assert row["exceptional_point"] == "true"


def test_sweep_time_slope_in_large_regime(capsys):
    code, out, _ = run(capsys, "sweep", "--omega", "1", "--lambda", "2", "--gamma", "1", "--photons", "100",
                       "--t", "5:50:10:log")
    assert code == 0
    rows = table(out)
    t = np.array([float(r["t"]) for r in rows])
    d = np.array([float(r["delta_omega_sq_full"]) for r in rows])
    slope = np.polyfit(np.log(t), np.log(d), 1)[0]
    assert -2.2 < slope < -1.9


def test_sweep_lambda_scan_matches_drive_scan(capsys):
    code, out, _ = run(capsys, "sweep", "--omega", "1", "--lambda", "0.9999:1.0003:9", "--gamma", "0.01",
                       "--t", "300")
    assert code == 0
    rows = table(out)
    lams = [float(r["lambda"]) for r in rows]
    vals = [float(r["delta_omega_sq_full"]) for r in rows]
    best, _ = optimal_drive_scan(1.0, 0.01, VACUUM, PhotonCounting(), 300.0, lams)
    assert lams[int(np.argmin(vals))] == best
    assert abs(best - math.hypot(1.0, 0.01)) <= 1e-4


def test_sweep_row_round_trip(capsys):
    code, out, _ = run(capsys, "sweep", "--omega", "0.1:1:3", "--lambda", "2", "--gamma", "1",
                       "--detector", "homodyne", "--theta", "0.3", "--photons", "50", "--t", "12",
                       "--pipeline", "both")
    assert code == 0
    rows = table(out)
    r = rows[1]
    code, out2, _ = run(capsys, "sweep", "--omega", r["omega"], "--lambda", r["lambda"], "--gamma", r["gamma"],
                        "--detector", r["detector"], "--theta", r["theta"], "--photons", r["photons"],
                        "--t", r["t"], "--pipeline", r["pipeline"], "--fd-step", r["fd_step"])
    assert table(out2)[0] == r


def test_sweep_is_deterministic_across_workers(capsys, monkeypatch):
    argv = ["sweep", "--omega", "1", "--lambda", "0.2:1.2:6", "--gamma", "0.5:1:2", "--t", "20"]
    _, serial, _ = run(capsys, *argv)
    monkeypatch.setenv(cli.WORKERS_ENV, "3")
    _, parallel, _ = run(capsys, *argv)
    assert serial == parallel
    assert len(table(serial)) == 12


def test_sweep_writes_file(tmp_path, capsys):
    path = tmp_path / "out.csv"
    code, out, _ = run(capsys, "sweep", "--omega", "1", "--lambda", "0.5", "--gamma", "1", "--t", "10",
                       "-o", str(path))
    assert code == 0 and out == ""
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[0] == ",".join(cli.SWEEP_HEADER)


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"omega": 1, "lambda": 0.5, "gamma": 1, "t": "10:20:2"}))
    code, out, _ = run(capsys, "sweep", "--config", str(cfg), "--lambda", "0.7")
    assert code == 0
    rows = table(out)
    assert [float(r["lambda"]) for r in rows] == [0.7, 0.7]
    assert [float(r["t"]) for r in rows] == [10.0, 20.0]


@pytest.mark.parametrize("argv", [
    ["sweep", "--omega", "0:1:2", "--lambda", "0:1:2", "--gamma", "0.5:1:2", "--t", "1"],
    ["sweep", "--omega", "1", "--lambda", "0.5", "--gamma", "1", "--t", "0:1:2:log"],
    ["sweep", "--omega", "1", "--lambda", "0.5", "--gamma", "1", "--t", "1:2"],
    ["sweep", "--omega", "1", "--lambda", "0.5", "--gamma", "1", "--t", "1:2:0"],
    ["sweep", "--omega", "1", "--lambda", "0.5", "--gamma", "1"],
    ["sweep", "--omega", "1", "--lambda", "0.5", "--gamma", "1", "--t", "1", "--coefficients", "oracle"],
    ["coeffs", "--omega", "1", "--lambda", "-1", "--gamma", "1", "--t", "1"],
    ["verify", "no-such-suite"],
    ["verify"],
    ["frobnicate"],
])
def test_usage_errors_exit_two(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "usage error" in err


def test_bad_config_exits_two(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"omega": 1, "colour": "blue"}))
    code, _, err = run(capsys, "sweep", "--config", str(cfg))
    assert code == 2 and "colour" in err


def test_bad_worker_env_exits_two(capsys, monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "many")
    code, _, _ = run(capsys, "sweep", "--omega", "1", "--lambda", "0.5:1:3", "--gamma", "1", "--t", "5")
    assert code == 2


def test_hard_error_names_grid_point(capsys, monkeypatch):
    def boom(*args, **kwargs):
        raise IllConditionedDerivative("slopes disagree")

    monkeypatch.setattr(cli, "delta_omega_full", boom)
    code, out, err = run(capsys, "sweep", "--omega", "1", "--lambda", "0.25:0.5:2", "--gamma", "1", "--t", "5")
    assert code == 1
    assert out == ""
    assert "'lambda': 0.25" in err and "IllConditionedDerivative" in err


def test_verify_report_passes(capsys):
    code, out, _ = run(capsys, "verify", "wick-vs-decoupling")
    report = json.loads(out)
    assert code == 0 and report["pass"] is True
    assert report["suite"] == "wick-vs-decoupling"
    assert set(report["cases"][0]) == {"name", "observed", "expected", "tol", "pass"}


def test_verify_spectral(capsys):
    code, out, _ = run(capsys, "verify", "spectral")
    assert code == 0 and json.loads(out)["pass"]


def test_verify_failure_exits_one(capsys):
    code, out, _ = run(capsys, "verify", "asymptotics")
    report = json.loads(out)
    assert code == (0 if report["pass"] else 1)
    small = report["cases"][0]
    assert small["name"].startswith("small-photon") and small["pass"]


def test_verify_tolerance_override(capsys):
    code, out, _ = run(capsys, "verify", "asymptotics", "--tol", "100")
    assert code == 0 and all(c["tol"] == 100 for c in json.loads(out)["cases"])


def test_pt_table(capsys):
    code, out, _ = run(capsys, "pt", "--omega", "1", "--lambda", "0:2:5")
    assert code == 0
    rows = table(out)
    ep = [r for r in rows if r["exceptional_point"] == "true"]
    assert len(ep) == 1 and float(ep[0]["lambda"]) == 1.0 and float(ep[0]["splitting"]) == 0.0
    below = rows[1]
    assert float(below["re_eig_plus"]) == pytest.approx(math.sqrt(1 - 0.25))


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "twophoton", "pt", "--omega", "1", "--lambda", "1"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert res.stdout.splitlines()[0].startswith("omega,lambda")
