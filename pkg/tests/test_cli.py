import csv
import json
import subprocess
import sys

import pytest

from bergman_lab import cli
from bergman_lab.cli import EXIT_FAIL, EXIT_IO, EXIT_OK, main, thread_count, weight_rows


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def write_config(tmp_path, text):
    path = tmp_path / "run.toml"
    path.write_text(text)
    return str(path)


# ----------------------------------------------------------------
# weight


def test_weight_n3_writes_513_rows(tmp_path):
    assert main(["weight", "--out", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "weight.csv")
    assert rows[0] == ["r", "k", "h", "W", "ode_residual", "lower_bound", "upper_bound"]
    assert len(rows) == 514
    assert (tmp_path / "weight.gp").read_text().startswith("set datafile separator ','")


def test_weight_n2_residual_column(tmp_path):
    cfg = write_config(tmp_path, "n = 2\n")
    assert main(["weight", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "weight.csv")[1:]
    assert max(abs(float(r[4])) for r in rows) <= 1e-10


def test_weight_csv_round_trips_exactly(tmp_path):
    main(["weight", "--out", str(tmp_path)])
    rows = read_csv(tmp_path / "weight.csv")[1:]
    ref = weight_rows(3)
    assert all(float(a) == float(b) for row, want in zip(rows, ref) for a, b in zip(row, want))


def test_missing_output_dir_is_io_error(tmp_path, capsys):
    missing = tmp_path / "nope"
    assert main(["weight", "--out", str(missing)]) == EXIT_IO
    assert not missing.exists()
    assert "does not exist" in capsys.readouterr().err


def test_malformed_toml_is_io_error(tmp_path, capsys):
    cfg = write_config(tmp_path, "n = [\n")
    assert main(["weight", "--config", cfg, "--out", str(tmp_path)]) == EXIT_IO
    assert "malformed TOML" in capsys.readouterr().err
    assert not (tmp_path / "weight.csv").exists()


def test_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    for d in (a, b):
        assert main(["weight", "--seed", "9", "--out", str(d)]) == EXIT_OK
        assert main(["stability-fit", "--out", str(d)]) == EXIT_OK
    for name in ("weight.csv", "phi_fit.csv", "fit.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


# ----------------------------------------------------------------
# verify and stability-fit


def test_verify_monotonicity_for_constant(tmp_path, capsys):
    cfg = write_config(tmp_path, "test_functions = [[]]\n")
    assert main(["verify", "monotonicity", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text())
    eq = next(c for c in report["checks"] if c["name"] == "monotonicity_equality")
    assert eq["passed"] and eq["worst_margin"] >= 0
    assert report["config"]["tolerances"]["monotonicity"] == 1e-6
    assert "PASS monotonicity_equality" in capsys.readouterr().out


def test_verify_geometry(tmp_path):
    assert main(["verify", "geometry", "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["passed"] and report["exit_code"] == EXIT_OK
    assert {c["name"] for c in report["checks"]} == {"jacobian", "isometry_invariants", "measure_invariance"}


def test_verify_failure_exit_code(tmp_path):
    # an impossible tolerance on the slope makes the stability suite fail
    cfg = write_config(tmp_path, "[tolerances]\nslope = 1e-9\n")
    assert main(["stability-fit", "--config", cfg, "--out", str(tmp_path)]) == EXIT_FAIL
    assert json.loads((tmp_path / "fit.json").read_text())["passed"] is False


@pytest.mark.parametrize("n,target", [(2, 2.0), (3, 2.5), (4, 3.0)])
def test_stability_fit_slope(tmp_path, n, target):
    cfg = write_config(tmp_path, f"n = {n}\n")
    assert main(["stability-fit", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert abs(fit["slope"] - target) <= 0.05
    header = read_csv(tmp_path / "phi_fit.csv")[0]
    assert header == ["T", "phi", "log1mT", "logphi"]


def test_unknown_suite_is_rejected():
    with pytest.raises(SystemExit):
        main(["verify", "everything"])


def test_thread_count(monkeypatch):
    monkeypatch.setenv("BERGMAN_LAB_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("BERGMAN_LAB_THREADS", "zero")
    assert thread_count() == 1
    monkeypatch.setenv("BERGMAN_LAB_THREADS", "2")
    assert cli._pmap(lambda x: x * x, [1, 2, 3]) == [1, 4, 9]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "bergman_lab", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
