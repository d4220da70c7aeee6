import io
import json
import subprocess
import sys

import numpy as np
import pytest

from fourcorners import cli

from conftest import SX


def run(*argv):
    buf = io.StringIO()
    code = cli.run(list(argv), stdout=buf)
    return code, buf.getvalue()


def test_spectrum_json():
    code, out = run("spectrum", "amplitude_damping", "--kappa", "2")
    assert code == 0
    d = cli.parse_json(out)
    assert d["schema_version"] == cli.SCHEMA_VERSION and d["command"] == "spectrum"
    assert np.isclose(d["dissipative_gap"], 1.0)
    ev = cli.complex_matrix([d["eigenvalues"]])[0]
    assert np.allclose(sorted(ev.real), [-2, -1, -1, 0])


def test_corners_four_level():
    code, out = run("corners", "four_level", "--alpha", "0")
    d = cli.parse_json(out)
    assert code == 0 and d["rank"] == 2 and d["proposition1"]["passed"]
    assert np.isclose(d["delta_edg"], 0.5) and d["delta_edg"] >= d["delta_dg"] - 1e-12


def test_asymptotics_conserved_weight():
    code, out = run("asymptotics", "four_level", "--alpha", "1.0")
    d = cli.parse_json(out)
    assert code == 0 and d["n_modes"] == 4
    J01 = cli.complex_matrix(d["J_kl"]["01"])
    assert np.isclose(J01[2, 3].real, 1 / 3) and np.isclose(J01[0, 1].real, 1.0)
    J00 = cli.complex_matrix(d["J_kl"]["00"])
    assert np.isclose(J00[2, 2].real, 1.0)


def test_gap_sweep_csv_and_roundtrip(tmp_path):
    out = tmp_path / "sweep.csv"
    code, _ = run("gap-sweep", "two_photon", "--alpha", "0:1:0.5", "--trunc", "24", "--out", str(out))
    assert code == 0
    head, rows = cli.parse_csv(out.read_text())
    assert tuple(head) == cli.CSV_COLUMNS
    alphas = [r["alpha"] for r in rows]
    assert alphas == [0.0, 0.5, 1.0]
    assert all(b > a for a, b in zip(alphas, alphas[1:]))
    for r in rows:
        assert r["delta_edg"] >= r["delta_dg"] - 1e-9
        assert abs(r["parent_gap"] - r["delta_edg"]) < 1e-8 * max(1, r["delta_edg"])
        assert r["warning"] in (0.0, 1.0)
    assert np.isclose(rows[0]["delta_dg"], 1.0)
    # round trip: re-emitting parsed rows gives the same bytes
    again = cli.parse_csv(cli.emit_csv(rows))[1]
    assert again == rows


def test_gap_sweep_empty_range():
    code, out = run("gap-sweep", "two_photon", "--alpha", "1:0:0.5", "--trunc", "12",
                    "--no-convergence-check")
    assert code == 0 and out == ",".join(cli.CSV_COLUMNS) + "\n"


def test_gap_sweep_deterministic():
    args = ("gap-sweep", "two_photon", "--alpha", "0.2,0.7", "--trunc", "14", "--no-convergence-check")
    assert run(*args)[1] == run(*args)[1]


def test_gap_sweep_workers_match():
    serial = cli.gap_sweep("two_photon", [0.3, 0.9], {"truncation": 24}, check=False, workers=1)
    parallel = cli.gap_sweep("two_photon", [0.3, 0.9], {"truncation": 24}, check=False, workers=2)
    assert cli.emit_csv(serial) == cli.emit_csv(parallel)
    assert not any(r["warning"] for r in serial)


def test_gap_sweep_truncation_warning():
    rows = cli.gap_sweep("two_photon", [0.5, 1.0, 2.0], {"truncation": 16}, check=True)
    assert [r["warning"] for r in rows] == [0, 1, 1]
    assert np.isnan(rows[2]["delta_edg"])
    text = cli.emit_csv(rows)
    assert ",nan,nan,nan,1" in text
    assert np.isnan(cli.parse_csv(text)[1][2]["delta_dg"])


def test_json_roundtrip_nonfinite():
    obj = {"a": np.array([1 + 2j, np.nan]), "b": float("inf"), "c": [np.float64(1.5), 2]}
    d = cli.parse_json(cli.emit_json(obj))
    assert d["a"][0] == [1.0, 2.0] and np.isnan(d["a"][1][0]) and d["b"] == float("inf")
    assert d["c"] == [1.5, 2]


def test_config_file(tmp_path):
    cfg = {"schema_version": 1, "model": {"builtin": "four_level", "params": {"alpha": 1.0}}}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    code, out = run("asymptotics", "--config", str(p))
    assert code == 0 and cli.parse_json(out)["n_modes"] == 4
    cfg["schema_version"] = 99
    p.write_text(json.dumps(cfg))
    assert run("asymptotics", "--config", str(p))[0] == 1


def test_explicit_model_config(tmp_path):
    cfg = {"schema_version": 1,
           "model": {"H": [[0, 0], [0, 0]], "jumps": [{"F": [[0, 1], [0, 0]], "kappa": 1.0}]}}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    code, out = run("spectrum", "--config", str(p))
    assert code == 0 and np.isclose(cli.parse_json(out)["dissipative_gap"], 0.5)


@pytest.mark.parametrize("argv", [
    ("spectrum", "no_such_model"),
    ("spectrum", "amplitude_damping", "--kappa", "-1"),
    ("spectrum", "amplitude_damping", "--alpha", "1"),
    ("bogus-command",),
    ("spectrum",),
    ("gap-sweep", "two_photon"),
    ("gap-sweep", "two_photon", "--alpha", "a:b:c"),
    ("spectrum", "two_photon", "--trunc", "2"),
    ("spectrum", "--config", "/nonexistent.json"),
    ("corners", "amplitude_damping", "--format", "csv"),
    ("embed-channel",),
    ("respond", "four_level"),
])
def test_config_errors_exit_1(argv):
    assert run(*argv)[0] == 1


def test_numerical_failure_exit_2(capsys):
    code, _ = run("holonomy", "cat_pair", "--trunc", "30", "--steps", "20")
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert "rank" in err["error"]


def test_embed_channel_verify(tmp_path):
    p = 0.3
    kraus = [np.sqrt(1 - p) * np.eye(2), np.sqrt(p) * SX]
    f = tmp_path / "k.json"
    f.write_text(json.dumps({"kraus": [E.real.tolist() for E in kraus]}))
    code, out = run("embed-channel", "--kraus", str(f), "--kappa", "1.5", "--verify")
    d = cli.parse_json(out)
    assert code == 0 and d["max_channel_deviation"] < 1e-9 and d["propagation_deviation"] < 1e-6
    f.write_text(json.dumps([[[1, 0], [0, 0.5]]]))
    assert run("embed-channel", "--kraus", str(f), "--kappa", "1")[0] == 1


def test_respond(tmp_path):
    V = tmp_path / "V.json"
    V.write_text(json.dumps(np.diag([0.0, 0.0, 1.0, 1.0]).tolist()))
    Vm = np.zeros((4, 4))
    Vm[0, 2] = Vm[2, 0] = 1.0
    V.write_text(json.dumps(Vm.tolist()))
    code, out = run("respond", "four_level", "--alpha", "0.5", "--V", str(V), "--omega", "0.5,1.5")
    d = cli.parse_json(out)
    assert code == 0 and d["W_unitary"] and len(d["chi"]) == 2
    assert d["leakage_identity_deviation"] < 1e-8


def test_qgt_command():
    code, out = run("qgt", "four_level", "--point", "0.1,0.2", "--seed", "3")
    d = cli.parse_json(out)
    assert code == 0
    M = np.array(d["metric"])
    assert np.allclose(M, M.T) and np.linalg.eigvalsh(M).min() > -1e-10
    assert run("qgt", "two_photon")[0] == 1


def test_parse_range():
    assert cli.parse_range("0:3:0.05")[-1] == 3.0 and len(cli.parse_range("0:3:0.05")) == 61
    assert cli.parse_range("1,2.5") == [1.0, 2.5]
    with pytest.raises(cli.ConfigError):
        cli.parse_range("0:1:0")


def test_threads_env(monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "zero")
    assert run("spectrum", "amplitude_damping")[0] == 1
    monkeypatch.setenv(cli.THREADS_ENV, "1")
    assert run("spectrum", "amplitude_damping")[0] == 0


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "fourcorners.cli", "spectrum", "thermal_qubit"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["dim"] == 2
