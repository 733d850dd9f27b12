import csv
import io
import json
import math

import numpy as np
import pytest

from geomphase.cli import EXIT_CONFIG, EXIT_OK, EXIT_PHYSICS, EXIT_VERIFY, SWEEP_COLUMNS, main, parse_real
from geomphase.phases import standard_coherent_phase
from geomphase.presets import FIGURES
from geomphase.states import NMAX_ENV


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_parse_real():
    assert parse_real("pi/4") == math.pi / 4
    assert parse_real("2pi") == 2 * math.pi
    assert parse_real("-0.5*pi") == -0.5 * math.pi
    assert parse_real("1e-3") == 1e-3


def test_point_trivial(capsys):
    code, out, _ = run(capsys, "--state", "coherent1", "--eta", "0", "--beta2", "1", "--omega", "pi/4", "--t", "0")
    assert code == EXIT_OK
    (row,) = rows_of(out)
    assert float(row["gamma_unwrapped"]) == 0.0
    assert set(row) >= {"chi", "delta", "gamma_unwrapped", "gamma_mod", "mean_level", "truncation_index"}


def test_point_cyclic_squeezed(capsys):
    code, out, _ = run(capsys, "--state", "squeezed", "--eta", "0", "--r", "1", "--t", "8", "--format", "json")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["result"]["gamma_mod"] == pytest.approx(2.3945083837061087, abs=1e-9)
    assert doc["config"]["family"] == "squeezed" and doc["config"]["t"] == 8.0


def test_point_with_oracle(capsys):
    code, out, _ = run(
        capsys, "--state", "coherent1", "--eta", "0.6", "--beta2", "1", "--omega", "pi/4", "--t", "1", "--oracle",
        "--format", "json",
    )
    assert code == EXIT_OK
    res = json.loads(out)["result"]
    assert res["abs_diff_gamma"] < 1e-8
    assert res["abs_diff_gamma_connection"] < 1e-8
    assert res["oracle_gamma"] == pytest.approx(res["gamma_unwrapped"], abs=1e-8)


def test_physics_error_exit_code(capsys):
    code, out, err = run(capsys, "--state", "coherent1", "--eta", "1", "--beta2", "1", "--t", "1", "--format", "json")
    assert code == EXIT_PHYSICS
    assert json.loads(out)["result"]["error"] == "SingularNonlinearity"
    assert "SingularNonlinearity" in err
    code, out, _ = run(capsys, "--state", "coherent1", "--beta2", "30", "--t", "4")
    assert code == EXIT_PHYSICS
    assert rows_of(out)[0]["error"] == "UndefinedPhase"


@pytest.mark.parametrize(
    "argv",
    [
        ["--figure", "1", "--eta", "0.3"],
        ["--figure", "4", "--omega", "1"],
        ["--state", "coherent1", "--sweep", "t", "--range", "5:1:10"],
        ["--state", "coherent1", "--sweep", "t", "--range", "0:1:1"],
        ["--state", "coherent1", "--sweep", "t"],
        ["--state", "coherent1"],
        ["--state", "coherent1", "--r", "1", "--t", "1"],
        ["--state", "squeezed", "--beta2", "1", "--t", "1"],
        ["--state", "coherent1", "--sweep", "r", "--range", "0:1:3", "--t", "1"],
        ["--state", "squeezed", "--sweep", "t", "--range", "0:1:3", "--oracle"],
        ["--state", "coherent1", "--eta", "0.1", "--f-table", "x.txt", "--t", "1"],
        ["--state", "bogus", "--t", "1"],
        ["--t", "1"],
        ["--state", "coherent1", "--t", "1", "--nmax", "0"],
        ["--state", "coherent1", "--t", "one"],
    ],
)
def test_config_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == EXIT_CONFIG
    assert out == ""
    assert err.startswith("error:")


def test_bad_env_cap(capsys, monkeypatch):
    monkeypatch.setenv(NMAX_ENV, "many")
    code, _, err = run(capsys, "--state", "coherent1", "--t", "1")
    assert code == EXIT_CONFIG and NMAX_ENV in err


def test_env_cap_honoured(capsys, monkeypatch):
    code, out, _ = run(capsys, "--state", "squeezed", "--r", "1", "--t", "1")
    assert code == EXIT_OK and int(rows_of(out)[0]["truncation_index"]) == 128
    monkeypatch.setenv(NMAX_ENV, "64")
    code, out, _ = run(capsys, "--state", "squeezed", "--r", "1", "--t", "1")
    assert code == EXIT_PHYSICS and rows_of(out)[0]["error"] == "DivergentSeries"
    # an explicit flag beats the environment
    code, out, _ = run(capsys, "--state", "squeezed", "--r", "1", "--t", "1", "--nmax", "512")
    assert code == EXIT_OK


def test_f_table_file(capsys, tmp_path):
    path = tmp_path / "f.txt"
    path.write_text("# f(0) f(1) ...\n" + "\n".join(["1.0"] * 80) + "\n")
    code, out, _ = run(capsys, "--state", "coherent1", "--f-table", str(path), "--beta2", "1", "--t", "3")
    assert code == EXIT_OK
    ref = standard_coherent_phase(1.0, math.pi / 4, 3.0)
    assert float(rows_of(out)[0]["gamma_unwrapped"]) == pytest.approx(ref.gamma_unwrapped, abs=1e-12)
    path.write_text("1.0, 1.0, 1.0\n")
    assert run(capsys, "--state", "coherent1", "--f-table", str(path), "--beta2", "1", "--t", "3")[0] == EXIT_CONFIG
    assert run(capsys, "--state", "coherent1", "--f-table", str(tmp_path / "none"), "--t", "3")[0] == EXIT_CONFIG


def test_t_sweep(capsys):
    code, out, _ = run(capsys, "--state", "coherent2", "--eta", "0.33", "--beta2", "1", "--sweep", "t", "--range", "0:20:101")
    assert code == EXIT_OK
    assert out.splitlines()[0] == ",".join(SWEEP_COLUMNS)
    rows = rows_of(out)
    assert len(rows) == 101
    t = np.array([float(r["sweep_value"]) for r in rows])
    assert np.all(np.diff(t) > 0)
    chi = np.array([float(r["chi"]) for r in rows])
    assert np.abs(np.diff(chi)).max() < math.pi


def test_r_and_eta_sweeps(capsys):
    code, out, _ = run(capsys, "--state", "squeezed", "--eta", "0.8", "--t", "0.5", "--sweep", "r", "--range", "0:4:9")
    assert code == EXIT_OK and len(rows_of(out)) == 9
    code, out, _ = run(
        capsys, "--state", "coherent1", "--beta2", "1", "--t", "2", "--sweep", "eta", "--range", "0:1.5:4", "--format", "json"
    )
    assert code == EXIT_OK
    doc = json.loads(out)
    errors = {row["sweep_value"]: row["error"] for row in doc["rows"]}
    # eta = 1 puts a pole at f(1); that row is marked and the sweep continues
    assert errors[1.0] == "SingularNonlinearity"
    assert errors[0.0] is None and errors[0.5] is None
    assert len(errors) == 4
    assert doc["config"]["sweep"] == "eta" and doc["config"]["range"] == [0.0, 1.5, 4]


def test_figure_csv_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["--figure", "2", "--out", str(a)]) == EXIT_OK
    assert main(["--figure", "2", "--out", str(b)]) == EXIT_OK
    raw = a.read_bytes()
    assert raw == b.read_bytes()
    assert b"\r" not in raw
    rows = rows_of(raw.decode("utf-8"))
    assert len(rows) == 4 * FIGURES[2].steps
    assert [r["curve_label"] for r in rows[:: FIGURES[2].steps]] == FIGURES[2].labels()
    # 17 significant digits round-trip exactly
    x = rows[100]["gamma_unwrapped"]
    assert float(format(float(x), ".17g")) == float(x)


def test_figure_json_header(capsys):
    code, out, _ = run(capsys, "--figure", "4", "--format", "json")
    assert code == EXIT_OK
    doc = json.loads(out)
    cfg = doc["config"]
    assert cfg["figure"] == 4 and cfg["sweep"] == "r" and cfg["t"] == 0.5
    assert cfg["etas"] == [0.0, 0.0625, 0.8, 0.95] and cfg["range"] == [0.0, 12.0, 512]
    assert len(doc["rows"]) == 4 * 512
    marked = [r for r in doc["rows"] if r["error"]]
    assert all(r["gamma_unwrapped"] is None for r in marked)
    assert {r["error"] for r in marked} <= {"DivergentSeries", "UndefinedPhase", "UnstableUnwrap"}


def test_verify_report(tmp_path):
    path = tmp_path / "verify.json"
    code = main(["verify", "--inject-pole", "--format", "json", "--out", str(path)])
    doc = json.loads(path.read_text())
    statuses = {c["name"]: c["status"] for c in doc["checks"]}
    failing = sorted(name for name, s in statuses.items() if s == "FAIL")
    assert code == (EXIT_VERIFY if failing else EXIT_OK)
    assert statuses["pole injection eta=1"] == "SKIP"
    assert any(name.startswith("truncation stability") for name in statuses)
    for c in doc["checks"]:
        if c["status"] == "PASS":
            assert c["measured"] < c["limit"]


def test_verify_halved_cap_reports_limited_presets(tmp_path):
    path = tmp_path / "v.txt"
    main(["verify", "--nmax", "256", "--out", str(path)])
    text = path.read_text()
    limited = [ln for ln in text.splitlines() if ln.startswith("SKIP") and "truncation-limited" in ln]
    assert any("figure 3 (b)" in ln for ln in limited)
    assert text.rstrip().splitlines()[-1].endswith("skipped")
