import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_effect, random_scenario
from dimwitness import (
    Effect,
    Scenario,
    StructuralError,
    build_probability_matrix,
    load_scenario,
    registry,
    save_scenario,
    scenario_digest,
    witness,
)
from dimwitness import io as dio
from dimwitness.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# serialization

def test_scenario_round_trip_is_byte_identical(tmp_path, rng):
    mixed = random_scenario(rng, 3, 4, mixed=True)
    raw = Scenario(mixed.preparations[:3], [Effect.from_matrix(0.3 * np.eye(3)), random_effect(rng, 3, rank=2)])
    for s in (registry.build("qubit_triangle_k2"), registry.build("ququart_k4_rank2"), mixed, raw):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_scenario(s, a)
        loaded = load_scenario(a)
        save_scenario(loaded, b)
        assert a.read_bytes() == b.read_bytes()
        assert scenario_digest(loaded) == scenario_digest(s)
        assert witness(build_probability_matrix(loaded)) == witness(build_probability_matrix(s))


def test_canonical_json():
    text = dio.canonical_dumps({"b": 0.1, "a": [1, 2.5e-300]})
    assert text.endswith("\n") and text.index('"a"') < text.index('"b"')
    assert json.loads(text)["b"] == 0.1
    with pytest.raises(ValueError):
        dio.canonical_dumps({"x": float("nan")})


def test_scenario_format_validation():
    doc = dio.scenario_to_dict(registry.build("qubit_triangle_k2"))
    assert doc["format"] == "dimwitness.scenario" and doc["version"] == 1
    with pytest.raises(StructuralError):
        dio.scenario_from_dict({**doc, "format": "other"})
    with pytest.raises(StructuralError):
        dio.scenario_from_dict({**doc, "version": 99})


def test_probability_csv_round_trip(rng):
    pm = build_probability_matrix(random_scenario(rng, 2, 3))
    back = dio.probability_matrix_from_csv(dio.probability_matrix_to_csv(pm))
    assert np.array_equal(back.entries, pm.entries)
    with pytest.raises(StructuralError):
        dio.probability_matrix_from_csv("x,y\n1,2\n")


def test_counts_csv_round_trip_and_validation():
    counts = np.array([[3, 0, 10], [7, 2, 5]])
    text = dio.counts_to_csv(counts, 10)
    assert text.splitlines()[:2] == ["i,j,N_ij,N", "1,1,3,10"]
    got, N = dio.counts_from_csv(text)
    assert N == 10 and np.array_equal(got, counts)
    lines = text.splitlines()
    with pytest.raises(StructuralError):
        dio.counts_from_csv("\n".join(lines[:-1]))  # missing cell
    with pytest.raises(StructuralError):
        dio.counts_from_csv("\n".join(lines + [lines[1]]))  # duplicate cell
    with pytest.raises(StructuralError):
        dio.counts_from_csv("\n".join(lines[:-1] + ["2,3,5,11"]))  # mixed N
    with pytest.raises(StructuralError):
        dio.counts_from_csv("a,b\n")


def test_trace_csv():
    assert dio.trace_to_csv([]) == "stage,best\n"
    assert dio.trace_to_csv([0.5, 0.75]).splitlines() == ["stage,best", "0,0.5", "1,0.75"]


# command line

def test_usage_errors_exit_1(capsys, tmp_path):
    assert _run(capsys, "eval", "--no-such-flag")[0] == 1
    assert _run(capsys, "frobnicate")[0] == 1
    assert _run(capsys, "eval", "--scenario", str(tmp_path / "missing.json"))[0] == 1
    assert _run(capsys, "registry", "verify")[0] == 1
    assert _run(capsys, "classical-max", "--k", "5", "--exhaustive")[0] == 1


def test_eval_triangle(capsys, tmp_path):
    path = tmp_path / "triangle.json"
    save_scenario(registry.build("qubit_triangle_k2"), path)
    code, out, _ = _run(capsys, "eval", "--scenario", str(path), "--out", str(tmp_path / "r.json"))
    assert code == 0 and "0.649519" in out
    doc = dio.load_result(tmp_path / "r.json")
    assert doc["command"] == "eval"
    assert abs(doc["result"]["witness"]) == pytest.approx(0.6495190528, abs=1e-9)
    code, out, _ = _run(capsys, "eval", "--entry", "qubit_triangle_k2", "--csv", "-")
    assert code == 0 and "row,p1,p2,p3" in out


def test_classical_max_exhaustive(capsys):
    code, out, _ = _run(capsys, "classical-max", "--k", "3", "--exhaustive")
    lines = out.split()
    assert code == 0 and lines[0] == "2"
    assert len(lines) == 5 and lines[-1] == "1111"


def test_registry_commands(capsys):
    code, out, _ = _run(capsys, "registry", "verify", "--all")
    assert code == 0 and "FAIL" not in out
    assert len(out.splitlines()) == len(registry.list_entries())
    code, out, _ = _run(capsys, "registry", "verify", "qubit_triangle_k2", "--json")
    assert code == 0 and json.loads(out)[0]["passed"]
    assert _run(capsys, "registry", "verify", "nope")[0] == 1


def test_optimize_replay_and_report(capsys, tmp_path):
    res = tmp_path / "opt.json"
    trace = tmp_path / "trace.csv"
    code, out, _ = _run(capsys, "optimize", "--dim", "2", "--k", "2", "--restarts", "2", "--sweeps", "20",
                        "--seed", "5", "--out", str(res), "--trace-csv", str(trace))
    assert code == 0 and out.startswith("|W| = ")
    assert trace.read_text().splitlines()[0] == "stage,best"
    assert _run(capsys, "replay", str(res)) == (0, "REPRODUCED\n", "")

    doc = json.loads(res.read_text())
    doc["result"]["value"] += 1e-15
    tampered = tmp_path / "tampered.json"
    dio.write_json(tampered, doc)
    code, out, _ = _run(capsys, "replay", str(tampered))
    assert code == 2 and out.startswith("MISMATCH")

    code, out, _ = _run(capsys, "report", str(res))
    assert code == 0 and "optimize" in out


def test_simulate_detect_replay(capsys, tmp_path):
    runs = tmp_path / "runs.csv"
    code, _, err = _run(capsys, "simulate", "--entry", "qubit_axes_test_k4", "--shots", "10000",
                        "--trials", "20", "--seed", "3", "--out", str(runs))
    assert code == 0 and "excess fraction" in err
    assert runs.with_suffix(".json").exists()
    assert _run(capsys, "replay", str(runs.with_suffix(".json")))[:2] == (0, "REPRODUCED\n")

    scen = tmp_path / "s.json"
    save_scenario(registry.build("qubit_axes_test_k4"), scen)
    counts = tmp_path / "counts.csv"
    counts.write_text(dio.counts_to_csv(np.round(build_probability_matrix(load_scenario(scen)).entries[:4] * 100),
                                        100))
    code, out, _ = _run(capsys, "detect", "--counts", str(counts))
    assert code == 0
    assert set(json.loads(out)) == {"witness_hat", "variance", "z", "threshold", "verdict"}
    code, out, _ = _run(capsys, "detect", "--counts", str(counts), "--scenario", str(scen), "--variance", "model")
    assert code == 0 and json.loads(out)["verdict"] == "CONSISTENT"
    assert _run(capsys, "detect", "--counts", str(counts), "--variance", "model")[0] == 1


def test_report_empty_trace_and_side_by_side(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path, seed in ((a, "1"), (b, "2")):
        assert _run(capsys, "optimize", "--dim", "2", "--k", "2", "--restarts", "1", "--sweeps", "5",
                    "--max-stages", "2", "--seed", seed, "--out", str(path))[0] == 0
    code, out, _ = _run(capsys, "report", str(a), str(b))
    lines = out.splitlines()
    assert code == 0 and any(line.startswith("seed") and "1" in line and "2" in line for line in lines)
    assert str(a) in lines[0] and str(b) in lines[0]

    doc = json.loads(a.read_text())
    doc["result"]["trace"] = []
    empty = tmp_path / "empty.json"
    dio.write_json(empty, doc)
    csv_path = tmp_path / "t.csv"
    assert _run(capsys, "report", str(empty), "--trace-csv", str(csv_path))[0] == 0
    assert csv_path.read_text() == "stage,best\n"
    assert _run(capsys, "report", str(tmp_path / "missing.json"))[0] == 1


def test_seed_environment_variable(capsys, tmp_path, monkeypatch):
    args = ["optimize", "--dim", "2", "--k", "2", "--restarts", "1", "--sweeps", "5", "--max-stages", "2"]
    monkeypatch.setenv("DIMWIT_SEED", "17")
    assert _run(capsys, *args, "--out", str(tmp_path / "env.json"))[0] == 0
    assert json.loads((tmp_path / "env.json").read_text())["config"]["schedule"]["seed"] == 17
    monkeypatch.setenv("DIMWIT_SEED", "not-a-number")
    assert _run(capsys, *args)[0] == 1


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "dimwitness.cli", "classical-max", "--k", "2", "--table"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.split()[0] == "1"
