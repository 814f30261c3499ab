import csv
import io
import json
import subprocess

import numpy as np
import pytest

from polyfock import symbols as lib
from polyfock.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main
from polyfock.config import DEFAULT_SPEC
from polyfock.io import write_operator
from polyfock.operators import toeplitz_matrix

SMALL = ["--spec", "4,24,2,8"]
VERIFY_SMALL = ["--spec", "4,48,2,8"]  # J = 24 would put the default probe radius 3 past the gate


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# config: {")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


# --------------------------------------------------------------------------
# exit codes


@pytest.mark.parametrize("argv", [
    ["verify", "--spec", "6,4", "--radii", "3"],          # probe radius past the gate
    ["verify", "--spec", "6"],                            # malformed spec
    ["spectrum"],                                         # missing symbol
    ["spectrum", "--symbol", "nosuch"],
    ["spectrum", "--symbol", "gaussian", "--level", "9"],
    ["spectrum", "--symbol", "gaussian", "--quad", "10,10"],  # inexact rule
    ["berezin", "--operator", "identity", "--radii", "7"],
    ["berezin", "--operator", "/no/such/file"],
    ["berezin", "--operator", "identity", "--grid", "/no/such/grid.csv"],
    ["diagnose", "--symbol", "angular"],
    ["diagnose", "--symbol", "angular", "--probe", "psychic"],
    ["diagnose", "--symbol", "angular", "--probe", "vo", "--thresholds", "0.5,0.1"],
    ["verify", "--tol", "-1"],
    ["verify", "--radii", "1,x"],
])
def test_configuration_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_CONFIG
    assert "configuration error" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["spectrum", "--level", "1", "--poly", "2"])
    assert exc.value.code == 2


def test_verify_passes_and_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "verify", "--out", str(a))[0] == EXIT_OK
    assert run(capsys, "verify", "--out", str(b))[0] == EXIT_OK
    data = (a / "verify.json").read_bytes()
    assert data == (b / "verify.json").read_bytes()
    report = json.loads(data)
    assert report["schema"] == "polyfock-report/1" and report["passed"] and not report["failed"]
    assert report["config"]["spec"] == DEFAULT_SPEC.to_dict()


def test_verify_failure_exit_1(capsys):
    code, out, err = run(capsys, *VERIFY_SMALL, "verify", "--tol", "0")
    assert code == EXIT_FAIL
    assert json.loads(out)["failed"]
    assert "FAIL" in err


def test_verify_csv(capsys):
    code, out, _ = run(capsys, *VERIFY_SMALL, "verify", "--format", "csv")
    assert code == EXIT_OK
    rows = csv_rows(out)
    assert {r["passed"] for r in rows} == {"true"}
    assert all(float(r["residual"]) <= float(r["tolerance"]) for r in rows)


# --------------------------------------------------------------------------
# spectrum


def test_spectrum_gaussian(capsys):
    code, out, _ = run(capsys, "spectrum", "--symbol", "gaussian:1", "--level", "1")
    assert code == EXIT_OK
    d = json.loads(out)
    ev = np.array(d["eigenvalues"])[:, 0]
    assert np.abs(ev[:33] - 2.0 ** -(np.arange(33) + 1)).max() <= 1e-8
    assert d["max_abs_difference"] <= 1e-10


def test_spectrum_phase_csv(capsys):
    code, out, _ = run(capsys, "spectrum", "--symbol", "phase", "--format", "csv")
    assert code == EXIT_OK
    rows = csv_rows(out)
    mods = np.array([float(r["abs_eigenvalue"]) for r in rows])
    assert np.abs(mods - 2.0 ** (-(np.arange(64) + 1) / 2)).max() <= 1e-6
    assert list(rows[0]) == ["index", "re_eigenvalue", "im_eigenvalue", "abs_eigenvalue",
                             "singular_value", "re_radial", "im_radial", "abs_difference"]
    # 17 significant digits
    assert rows[0]["abs_eigenvalue"] == format(float(rows[0]["abs_eigenvalue"]), ".17g")


def test_spectrum_non_radial_and_poly(capsys):
    code, out, _ = run(capsys, *SMALL, "spectrum", "--symbol", "angular", "--poly", "2")
    assert code == EXIT_OK
    d = json.loads(out)
    assert len(d["eigenvalues"]) == 48 and "radial_eigenvalues" not in d


def test_spectrum_explicit_quadrature(capsys):
    code, out, _ = run(capsys, *SMALL, "spectrum", "--symbol", "gaussian:0.5", "--quad", "40,60")
    assert code == EXIT_OK
    assert json.loads(out)["max_abs_difference"] <= 1e-10


# --------------------------------------------------------------------------
# berezin


def test_berezin_identity_field(capsys):
    code, out, _ = run(capsys, "berezin", "--operator", "identity", "--radii", "1,2")
    assert code == EXIT_OK
    d = json.loads(out)
    assert len(d["points"]) == 32
    assert np.allclose(np.array(d["values"])[..., 0], 1.0)


def test_berezin_projection_difference(capsys):
    code, out, _ = run(capsys, "berezin", "--operator", "projection-difference", "--mode", "standard",
                       "--radii", "3", "--format", "csv")
    assert code == EXIT_OK
    assert max(abs(float(r["re_value"])) for r in csv_rows(out)) <= 1e-8
    code, out, _ = run(capsys, "berezin", "--operator", "projection-difference", "--radii", "2")
    d = json.loads(out)
    assert d["config"]["mode"] == "matrix"
    assert np.abs(np.array(d["values"])[..., 0] - np.diag([1, -1])).max() <= 1e-10


def test_berezin_heat_and_grid_file(tmp_path, capsys):
    grid = tmp_path / "pts.csv"
    grid.write_text("re,im\n0,0\n20,0\n", encoding="utf-8")
    code, out, _ = run(capsys, "berezin", "--mode", "heat", "--symbol", "angular", "--grid", str(grid))
    assert code == EXIT_OK
    vals = np.array(json.loads(out)["values"])[:, 0, 0, 0]
    assert vals[0] == pytest.approx(0, abs=1e-12) and vals[1] > 0.999


def test_berezin_pfok_operator(tmp_path, capsys):
    path = tmp_path / "T.pfok"
    write_operator(path, toeplitz_matrix(lib.gaussian(1.0), DEFAULT_SPEC, level=1))
    code, out, _ = run(capsys, "berezin", "--operator", str(path), "--radii", "0")
    assert code == EXIT_OK
    assert np.array(json.loads(out)["values"])[0, 0, 0, 0] == pytest.approx(0.5)


def test_berezin_writes_out_dir(tmp_path, capsys):
    code, out, _ = run(capsys, "berezin", "--operator", "flip", "--radii", "1", "--out", str(tmp_path),
                       "--format", "csv")
    assert code == EXIT_OK and out == ""
    text = (tmp_path / "berezin.csv").read_bytes().decode("utf-8")
    rows = csv_rows(text)
    assert float(rows[0]["re_value"]) == pytest.approx(np.exp(-2))


# --------------------------------------------------------------------------
# diagnose


@pytest.mark.parametrize("probe", ["vo", "vmo", "hankel-k"])
def test_diagnose_constant_is_consistent(capsys, probe):
    code, out, _ = run(capsys, "diagnose", "--symbol", "constant:2", "--probe", probe,
                       "--radii", "4,8")
    assert code == EXIT_OK
    assert json.loads(out)["verdict_hint"] == "consistent-with-compact"


def test_diagnose_phase_vmo(capsys):
    code, out, _ = run(capsys, "diagnose", "--symbol", "phase", "--probe", "vmo")
    d = json.loads(out)
    assert d["verdict_hint"] == "inconsistent"
    assert abs(d["profile"][-1][1] - 1) <= 0.05


def test_diagnose_ess_spec_and_files(tmp_path, capsys):
    code, _, err = run(capsys, "diagnose", "--symbol", "angular", "--probe", "ess-spec",
                       "--radii", "8,16", "--angles", "32", "--out", str(tmp_path))
    assert code == EXIT_OK and "warning" not in err
    d = json.loads((tmp_path / "ess-spec.json").read_text(encoding="utf-8"))
    cloud = np.array(d["data"]["cloud"])
    assert np.abs(np.hypot(cloud[:, 0], cloud[:, 1]) - 1).max() < 0.01
    assert (tmp_path / "ess-spec.csv").read_text(encoding="utf-8").startswith("# config:")


def test_diagnose_warning_is_reported(capsys):
    code, _, err = run(capsys, *SMALL, "diagnose", "--symbol", "phase", "--probe", "ess-spec",
                       "--radii", "4", "--angles", "8")
    assert code == EXIT_OK and "polyfock: warning:" in err


def test_diagnose_other_probes(capsys):
    for probe, extra in (("ray", ["--radii", "4,8"]), ("compactness", ["--radii", "1,2"]),
                         ("ell2-band", ["--poly", "2"])):
        code, out, _ = run(capsys, *SMALL, "diagnose", "--symbol", "gaussian", "--probe", probe, *extra)
        assert code == EXIT_OK, probe
        assert json.loads(out)["schema"] == "polyfock-report/1"


def test_console_script():
    res = subprocess.run(["polyfock", "spectrum", "--spec", "2,8", "--symbol", "constant:2",
                          "--format", "csv"], capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert float(csv_rows(res.stdout)[0]["re_eigenvalue"]) == pytest.approx(2.0, abs=1e-14)
    res = subprocess.run(["polyfock", "verify", "--spec", "6,4"], capture_output=True, text=True)
    assert res.returncode == 2
