import csv
import io
import json
import subprocess
import sys
import time

import numpy as np
import pytest

from rcdyn import suites
from rcdyn.cli import main
from rcdyn.dynamics import sw_matrix
from rcdyn.graph import make_complete
from rcdyn.models import ModelParams


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def json_lines(out):
    return [json.loads(line) for line in out.splitlines() if line.strip()]


def test_gap_sb_and_sw(capsys):
    code, out, _ = run(capsys, "gap", "--graph", "path:2", "--p", "0.5", "--q", "2", "--dynamics", "sb")
    rep = json.loads(out)
    assert code == 0
    assert rep["gap"] == pytest.approx(0.375, abs=1e-12)
    assert {"graph", "p", "q", "dynamics", "gap", "second_eigenvalue", "dim"} <= set(rep)
    code, out, _ = run(capsys, "gap", "--graph", "path:2", "--p", "0.5", "--q", "2", "--dynamics", "sw")
    assert json.loads(out)["gap"] == pytest.approx(0.75, abs=1e-12)


def test_gap_csv(capsys):
    code, out, _ = run(capsys, "gap", "--graph", "cycle:3", "--p", "0.3", "--q", "3",
                       "--dynamics", "heatbath", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 1 and rows[0]["dynamics"] == "heatbath"


def test_unknown_dynamics_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gap", "--graph", "path:2", "--p", "0.5", "--q", "2", "--dynamics", "nope"])
    assert exc.value.code == 2


def test_two_graph_sources_rejected(capsys, tmp_path):
    f = tmp_path / "g.json"
    f.write_text('{"n": 2, "edges": [[0, 1]]}')
    with pytest.raises(SystemExit) as exc:
        main(["gap", "--graph", "path:2", "--graph-file", str(f), "--p", "0.5", "--q", "2", "--dynamics", "sw"])
    assert exc.value.code == 2
    code, out, _ = run(capsys, "gap", "--graph-file", str(f), "--p", "0.5", "--q", "2", "--dynamics", "sw")
    assert code == 0 and json.loads(out)["dim"] == 2


def test_config_errors_exit_2(capsys):
    code, out, err = run(capsys, "gap", "--graph", "path:2", "--p", "1.5", "--q", "2", "--dynamics", "sw")
    assert code == 2 and out == "" and "p" in err
    code, *_ = run(capsys, "sample", "--graph", "path:2", "--p", "0.5", "--q", "2", "--seed", str(2**64))
    assert code == 2
    code, *_ = run(capsys, "gap", "--graph", "blob:3", "--p", "0.5", "--q", "2", "--dynamics", "sw")
    assert code == 2


def test_cap_exceeded_exit_3(capsys, monkeypatch):
    monkeypatch.setenv("RCDYN_MAX_STATES", "8")
    code, out, err = run(capsys, "gap", "--graph", "cycle:4", "--p", "0.5", "--q", "2", "--dynamics", "sw")
    assert code == 3 and "16" in err and out == ""
    monkeypatch.delenv("RCDYN_MAX_STATES")
    code, *_ = run(capsys, "gap", "--graph", "cycle:4", "--p", "0.5", "--q", "2", "--dynamics", "sw",
                   "--max-states", "8")
    assert code == 3


def test_verify_representation(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "representation")
    lines = json_lines(out)
    assert code == 0
    assert lines[-1]["suite"] == "aggregate" and lines[-1]["pass"]
    assert max(r["max_violation"] for r in lines[:-1]) < 1e-12


def test_verify_gap_comparison_defaults(capsys):
    t0 = time.perf_counter()
    code, out, _ = run(capsys, "verify", "--suite", "theorem")
    assert time.perf_counter() - t0 < 60
    assert code == 0 and json_lines(out)[-1]["pass"]


def test_verify_all_large_q(capsys):
    code, out, err = run(capsys, "verify", "--suite", "all", "--q", "7")
    lines = json_lines(out)
    assert code == 0, err
    graphs = {r["graph"] for r in lines if "graph" in r and r["suite"] == "theorem"}
    assert graphs and all(int(g.split(";")[0][2:]) <= 3 for g in graphs)


def test_verify_failure_exit_4(capsys, monkeypatch):
    def failing(name, cfg):
        return [lambda: [suites.record("theorem", "forced", 1.0, 0.0)]]
    monkeypatch.setattr(suites, "suite_tasks", failing)
    code, out, err = run(capsys, "verify", "--suite", "theorem")
    assert code == 4
    assert json_lines(out)[-1]["pass"] is False
    assert "forced" in err


def test_verify_unknown_suite(capsys):
    code, *_ = run(capsys, "verify", "--suite", "nonsense")
    assert code == 2


def test_verify_parallel_matches_serial(capsys):
    _, serial, _ = run(capsys, "verify", "--suite", "lemma", "--q", "2")
    _, parallel, _ = run(capsys, "verify", "--suite", "lemma", "--q", "2", "--jobs", "2", "--deterministic-order")
    assert serial == parallel


def test_sample_steps_zero(capsys):
    code, out, _ = run(capsys, "sample", "--graph", "cycle:3", "--p", "0.5", "--q", "2",
                       "--steps", "0", "--start", "5")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows == [["step", "state_index", "size", "components"], ["0", "5", "2", "1"]]


def test_sample_trace_is_deterministic(capsys):
    args = ("sample", "--graph", "cycle:4", "--p", "0.4", "--q", "3", "--steps", "30", "--seed", "17")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b
    _, c, _ = run(capsys, *args[:-1], "18")
    assert a != c
    rows = list(csv.DictReader(io.StringIO(a)))
    assert len(rows) == 31
    for r in rows:
        assert int(r["size"]) == bin(int(r["state_index"])).count("1")


def test_sample_census_k2(capsys):
    n = 100_000
    code, out, _ = run(capsys, "sample", "--graph", "path:2", "--p", "0.5", "--q", "2", "--dynamics", "sw",
                       "--steps", "1", "--chains", str(n), "--census")
    counts = {int(r["state_index"]): int(r["count"]) for r in csv.DictReader(io.StringIO(out))}
    sigma = np.sqrt(n * 0.25 * 0.75)
    assert code == 0
    assert abs(counts[1] - 0.25 * n) <= 3 * sigma
    assert abs(counts[0] - 0.75 * n) <= 3 * sigma


def test_sweep_triangle(capsys):
    code, out, _ = run(capsys, "sweep", "--graph", "complete:3", "--p-range", "0.1:0.9:0.1", "--q", "2")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 9
    assert list(rows[0]) == ["p", "q", "gap_sw", "gap_sb", "ratio", "factor_from_corollary_mix"]
    for r in rows:
        assert float(r["gap_sw"]) >= float(r["gap_sb"]) - 1e-9


def test_sweep_single_point_matches_gap(capsys):
    _, out, _ = run(capsys, "sweep", "--graph", "path:3", "--p", "0.3", "--q", "3")
    row = next(csv.DictReader(io.StringIO(out)))
    _, g_out, _ = run(capsys, "gap", "--graph", "path:3", "--p", "0.3", "--q", "3", "--dynamics", "sw")
    assert float(row["gap_sw"]) == json.loads(g_out)["gap"]


def test_sweep_empty_grid(capsys):
    code, out, _ = run(capsys, "sweep", "--graph", "path:3")
    assert code == 0
    assert out.strip() == "p,q,gap_sw,gap_sb,ratio,factor_from_corollary_mix"


def test_bounds_subcommands(capsys):
    code, out, _ = run(capsys, "bounds", "torus", "--p", "0.5", "--q", "2", "--L", "2", "--d", "2")
    rep = json.loads(out)
    assert code == 0 and {"k1", "k2", "log_bound"} <= set(rep)
    assert rep["log_bound"] == pytest.approx(rep["k1"] + 2 * rep["k2"])
    code, out, _ = run(capsys, "bounds", "width", "--graph", "cycle:6")
    rep = json.loads(out)
    assert rep["bandwidth"] == 2 and rep["linear_width"] == 2
    assert sorted(rep["witnesses"]["bandwidth"]) == list(range(6))


def test_graph_inspect_and_generate(capsys, tmp_path):
    code, out, _ = run(capsys, "graph", "generate", "--graph", "torus:3,2")
    data = json.loads(out)
    assert code == 0 and data["n"] == 9 and len(data["edges"]) == 18
    f = tmp_path / "t.json"
    f.write_text(out)
    _, out2, _ = run(capsys, "graph", "inspect", "--graph", str(f))
    info = json.loads(out2)
    assert info["connected"] and not info["tree"] and set(info["degrees"]) == {4}


def test_matrix_export(capsys):
    code, out, _ = run(capsys, "matrix", "--graph", "complete:3", "--p", "0.4", "--q", "2",
                       "--dynamics", "sw", "--format", "csv")
    M = np.loadtxt(io.StringIO(out), delimiter=",")
    np.testing.assert_array_equal(M, sw_matrix(make_complete(3), ModelParams(0.4, 2)).matrix)
    _, out, _ = run(capsys, "matrix", "--graph", "complete:3", "--p", "0.4", "--q", "2", "--dynamics", "sb")
    assert set(json.loads(out)) == {"dim", "lazy", "row_sum_max_err", "reversibility_max_err"}


def test_distribution_export(capsys):
    for measure, size in (("rc", 8), ("potts", 27), ("fkes", 216)):
        code, out, _ = run(capsys, "distribution", "--graph", "complete:3", "--p", "0.5", "--q", "3",
                           "--measure", measure)
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and len(rows) == size
        assert sum(float(r["probability"]) for r in rows) == pytest.approx(1.0)


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rcdyn", "gap", "--graph", "path:2", "--p", "0.5",
                           "--q", "2", "--dynamics", "sb"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["gap"] == pytest.approx(0.375)
