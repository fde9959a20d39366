import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from measurement_feedback.harness import cli
from measurement_feedback.harness.config import Scenario
from measurement_feedback.harness.output import (
    FIELD_COLUMNS,
    SUMMARY_COLUMNS,
    TRAJECTORY_COLUMNS,
    emit_csv,
    fmt,
    write_summaries,
)
from measurement_feedback.harness.runner import feedback_fields, run_ensemble, trajectory


def read(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_roundtrip(x):
    assert float(fmt(x)) == x


def test_trajectory_csv(tmp_path):
    rec = trajectory(Scenario.load("fig8").with_overrides({"K": "5"}), seed=1)
    path = tmp_path / "t.csv"
    emit_csv(rec, path)
    rows = read(path)
    assert tuple(rows[0]) == TRAJECTORY_COLUMNS
    assert len(rows) == 7
    col = TRAJECTORY_COLUMNS.index("F_EM")
    assert np.array_equal([float(r[col]) for r in rows[1:]], rec.F_EM)
    assert open(path, "rb").read().count(b"\r") == 0


def test_summary_csv_and_empty(tmp_path):
    sc = Scenario.load("fig6").with_overrides({"K": "4", "sweep.p0": "0.1, 0.2"})
    sums = run_ensemble(sc, runs=3, seed=2)
    path = tmp_path / "s.csv"
    emit_csv(sums, path)
    rows = read(path)
    assert rows[0] == ["p0"] + list(SUMMARY_COLUMNS)
    assert len(rows) == 1 + 2 * 5
    empty = tmp_path / "e.csv"
    write_summaries([], empty, axes=["p0"])
    assert read(empty) == [["p0"] + list(SUMMARY_COLUMNS)]


def test_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    rec = trajectory(Scenario.load("fig8").with_overrides({"K": "2"}), seed=1)
    with pytest.raises(OSError):
        emit_csv(rec, blocker / "sub" / "t.csv")


def test_fields_rows():
    rows = feedback_fields(Scenario.load("fig8").build())
    assert len(rows) == 2 * 50
    arr = np.array(rows)
    assert np.all(np.isfinite(arr)) and np.abs(arr[:, 4]).max() < 1e-9
    assert np.abs(arr[:, 2:4]).max() < math.pi


def run_cli(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_scenario_list(capsys):
    code, out, _ = run_cli(["scenario", "list"], capsys)
    assert code == 0 and "fig1" in out and "fig8" in out
    code, out, _ = run_cli(["scenario", "show", "fig1"], capsys)
    assert code == 0 and "[system]" in out


def test_cli_run_stdout(capsys):
    code, out, _ = run_cli(["run", "--scenario", "fig1", "--set", "K=3", "--seed", "5"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0]) == TRAJECTORY_COLUMNS and len(rows) == 5


def test_cli_flags(capsys, tmp_path):
    out = tmp_path / "a.csv"
    assert cli.main(["run", "--scenario", "fig1", "--set", "K=5", "--no-measurement", "--out", str(out)]) == 0
    rows = read(out)
    assert all(r[1] == "-1" for r in rows[1:])
    assert cli.main(["run", "--scenario", "fig1", "--set", "K=5", "--no-feedback", "--out", str(out)]) == 0
    assert cli.main(["reference", "--scenario", "fig3", "--set", "K=3", "--out", str(out)]) == 0
    assert read(out)[0] == ["t", "F_TE"]
    assert cli.main(["fields", "--scenario", "fig8", "--out", str(out)]) == 0
    assert tuple(read(out)[0]) == FIELD_COLUMNS


def test_cli_config_errors(capsys):
    code, _, err = run_cli(["run", "--scenario", "nope"], capsys)
    assert code == 2 and "config error" in err
    code, _, err = run_cli(["run", "--scenario", "fig1", "--set", "p0=0.9"], capsys)
    assert code == 2
    code, _, _ = run_cli(["run", "--scenario", "fig1", "--set", "garbage"], capsys)
    assert code == 2
    code, _, _ = run_cli(["validate", "nonsense"], capsys)
    assert code == 2


def test_cli_validate(capsys):
    code, out, _ = run_cli(["validate", "povm", "dilation"], capsys)
    assert code == 0 and out.count("PASS") == 2


def test_cli_validate_failure_exit_code(capsys, monkeypatch):
    from measurement_feedback.harness import validation

    failing = lambda: validation.SuiteResult("povm", False, 1.0, 1e-12, "forced")
    monkeypatch.setitem(validation.SUITES, "povm", failing)
    code, out, _ = run_cli(["validate", "povm"], capsys)
    assert code == 3 and "FAIL" in out


def test_cli_ensemble_deterministic_across_workers(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["ensemble", "--scenario", "fig3", "--set", "K=20", "--seed", "42", "--runs", "6"]
    assert cli.main(base + ["--out", str(a)]) == 0
    assert cli.main(base + ["--out", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cli_seed_range():
    with pytest.raises(SystemExit):
        cli.main(["run", "--scenario", "fig1", "--seed", str(2**64)])
