import csv
import io
import json
import subprocess
import sys

import jsonschema
import pytest

from exitbounds import cli, harness
from exitbounds.errors import ConvergenceError
from exitbounds.reports import JSON_SCHEMA, SCHEMA_TAG, Report

FAST_CASES = [
    ["bounds", "--d", "2", "--p", "1"],
    ["bounds", "--d", "1000", "--p", "2.5"],
    ["domain", "--spec", "triangle-eq r=1", "--p", "1"],
    ["domain", "--spec", "ellipse a=2 b=1"],
    ["domain", "--spec", "box 1 1 1", "--p", "2"],
    ["mc", "--spec", "ball d=2 r=1", "--n", "200", "--step", "1e-2", "--seed", "7"],
    ["mc", "--spec", "box 1 2", "--n", "200", "--step", "1e-2", "--start", "0.5,0.5"],
    ["eigen", "--spec", "triangle 0,0 1,0 0,1", "--h", "0.05"],
    ["sweep", "rectangles", "--a-list", "1,2,3"],
    ["sweep", "rectangles", "--a-list", "1,2", "--p", "2"],
    ["sweep", "triangles", "--h-div", "8"],
    ["sweep", "ellipses", "--h-div", "10"],
    ["sweep", "ordering"],
    ["sweep", "moments", "--spec", "box 1 1", "--n", "300", "--step", "1e-2"],
    ["sweep", "symmetrization", "--spec", "box 1 1", "--n", "300", "--step", "1e-2", "--grid", "1"],
    ["sweep", "survival", "--n", "300", "--step", "1e-2"],
    ["asymptotics", "--p", "1,2", "--d-list", "100,10000"],
]


def run(argv, capsys):
    code = cli.run(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("argv", FAST_CASES, ids=lambda a: " ".join(a[:2]))
def test_json_validates(argv, capsys):
    code, out, _ = run(argv + ["--output", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, JSON_SCHEMA)
    assert doc["rows"] and set(doc["columns"]) >= set(doc["rows"][0])


@pytest.mark.parametrize("argv", FAST_CASES[:9], ids=lambda a: " ".join(a[:2]))
def test_csv_header_and_digits(argv, capsys):
    code, out, _ = run(argv + ["--output", "csv"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == f"schema={SCHEMA_TAG}"
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    assert all(len(r) == len(rows[0]) for r in rows)


def test_csv_seventeen_digits():
    text = Report("t", [{"x": 0.1, "y": 1 / 3, "b": True, "n": None}]).to_csv()
    assert text.splitlines()[2] == "0.10000000000000001,0.33333333333333331,true,"


def test_json_mirrors_csv():
    rep = Report("t", [{"a": 1.5, "b": "s"}, {"a": 2.0, "c": None}], {"seed": 3})
    doc = json.loads(rep.to_json())
    assert doc["columns"] == ["a", "b", "c"] and doc["meta"] == {"seed": 3}
    assert rep.to_csv().splitlines()[1] == "a,b,c"


def test_bounds_table_golden(capsys):
    code, out, _ = run(["bounds", "--d", "2", "--p", "1", "--output", "json"], capsys)
    row = json.loads(out)["rows"][0]
    assert row["lower"] == 2.0
    assert row["c1_objective_at_reference"] <= 2.03785
    assert row["upper_c1"] == pytest.approx(2 * 2.03785, abs=2e-4)


def test_domain_triangle_value(capsys):
    code, out, _ = run(["domain", "--spec", "triangle-eq r=1", "--output", "json"], capsys)
    assert json.loads(out)["rows"][0]["G"] == pytest.approx(8 * 3.141592653589793 ** 2 / 27, abs=1e-12)


def test_mc_byte_identical(capsys):
    argv = ["mc", "--spec", "ball d=2 r=1", "--p", "1", "--n", "5000", "--seed", "7", "--step", "1e-3"]
    outs = []
    for fmt in ("table", "csv", "json"):
        a = run(argv + ["--output", fmt], capsys)[1]
        b = run(argv + ["--output", fmt], capsys)[1]
        assert a == b
        outs.append(a)
    c = run(argv + ["--output", "json", "--threads", "2"], capsys)[1]
    assert c == outs[2]


def test_threads_env_and_flag(monkeypatch, capsys):
    seen = []
    monkeypatch.setattr(cli, "estimate_moment", lambda *a: seen.append(a[-1]) or
                        __import__("exitbounds.simulate", fromlist=["x"]).estimate_moment(*a))
    monkeypatch.setenv("EXITBOUNDS_THREADS", "3")
    argv = ["mc", "--n", "200", "--step", "1e-2"]
    run(argv, capsys)
    run(argv + ["--threads", "2"], capsys)
    assert seen == [None, 2]  # None defers to the environment variable


def test_out_path(tmp_path, capsys):
    path = tmp_path / "r.csv"
    code, out, _ = run(["sweep", "ordering", "--output", "csv", "--out", str(path)], capsys)
    assert code == 0 and out == ""
    assert path.read_text().startswith("schema=exitbounds.v1\n")


@pytest.mark.parametrize("argv", [
    ["domain", "--spec", "blob"],
    ["nonsense"],
    ["mc", "--n", "50"],
    ["bounds", "--d", "1"],
    ["domain", "--spec", "triangle 0,0 1,0 0,1"],
    ["mc", "--threads", "0"],
    ["bounds", "--p", "abc"],
    ["eigen", "--spec", "ball d=3 r=1"],
])
def test_usage_errors(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 1
    assert err


def test_bad_spec_echoes_grammar(capsys):
    _, _, err = run(["domain", "--spec", "blob"], capsys)
    assert "grammar" in err


def test_nonconvergence_exit_2(monkeypatch, capsys):
    def boom(*a, **k):
        raise ConvergenceError("no", {"iterations": 5})
    monkeypatch.setattr(cli, "fd_eigen", boom)
    code, _, err = run(["eigen", "--spec", "box 1 1"], capsys)
    assert code == 2 and "iterations" in err


def test_invariant_exit_3(monkeypatch, capsys):
    row = harness.SweepRow("ordering", {"pair": "x"}, 1.0, None, 2.0, 1.0, harness.VIOLATED, -1.0,
                           asserted=True)
    monkeypatch.setattr(harness, "ordering_chain", lambda: [row])
    code, out, _ = run(["sweep", "ordering"], capsys)
    assert code == 3 and "violated" in out


def test_conjecture_violation_is_not_exit_3(monkeypatch, capsys):
    row = harness.SweepRow("rectangles", {"a": 2.0}, 3.0, None, 2.0, 2.9, harness.VIOLATED, -0.1)
    monkeypatch.setattr(harness, "rectangle_sweep", lambda a, p: [row])
    assert run(["sweep", "rectangles"], capsys)[0] == 0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "exitbounds", "sweep", "ordering", "--output", "csv"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("schema=exitbounds.v1")
