import json

import pytest

from submax.cli import main
from submax.instances import load_json, save_json


@pytest.fixture
def workspace(tmp_path):
    spec = {
        "instances": [
            {
                "generator": "gnp-cut",
                "n": 8,
                "p": 0.5,
                "seed": 3,
                "constraint": {"cardinality": {"k": 3}},
            },
            {
                "generator": "gnp-cut",
                "n": 8,
                "p": 0.5,
                "seed": 4,
                "constraint": {
                    "knapsacks": {
                        "weights": [[0.3, 0.25, 0.4, 0.2, 0.35, 0.3, 0.45, 0.25]],
                        "capacities": [1.0],
                    }
                },
            },
            {
                "generator": "gnp-cut",
                "n": 6,
                "p": 0.6,
                "seed": 5,
                "constraint": {"matroid": {"kind": "uniform", "rank": 2}},
            },
        ]
    }
    spec_path = tmp_path / "spec.json"
    save_json(spec_path, spec)
    out = tmp_path / "out"
    assert main(["generate", "--spec", str(spec_path), "--out", str(out)]) == 0
    return tmp_path, out


def test_generate_writes_manifest(workspace):
    _, out = workspace
    manifest = load_json(out / "manifest.json")
    assert len(manifest["instances"]) == 3


def test_solve_exact_card(workspace, capsys):
    tmp, out = workspace
    report = tmp / "rep.json"
    code = main(
        [
            "solve",
            "--instance", str(out / "instance_0000.json"),
            "--constraint", str(out / "instance_0000.constraint.json"),
            "--algorithm", "exact-card",
            "--out", str(report),
        ]
    )
    assert code == 0
    data = load_json(report)
    assert data["algorithm"] == "exact-card"
    assert data["guarantee"] == 0.25
    assert len(data["solution_set"]) == 3
    assert "value" in capsys.readouterr().out


def test_solve_knapsacks_and_packing(workspace, tmp_path):
    tmp, out = workspace
    assert (
        main(
            [
                "solve",
                "--instance", str(out / "instance_0001.json"),
                "--constraint", str(out / "instance_0001.constraint.json"),
                "--algorithm", "knapsacks",
                "--out", str(tmp_path / "k.json"),
            ]
        )
        == 0
    )
    assert (
        main(
            [
                "solve",
                "--instance", str(out / "instance_0002.json"),
                "--constraint", str(out / "instance_0002.constraint.json"),
                "--algorithm", "packing",
                "--out", str(tmp_path / "p.json"),
            ]
        )
        == 0
    )
    pdata = load_json(tmp_path / "p.json")
    assert pdata["extra"]["winner"] in pdata["extra"]["candidates"]
    assert len(pdata["solution_point"]) == 6


def test_solve_matroid_knapsacks_combined_constraint(tmp_path, workspace):
    tmp, out = workspace
    combined = tmp_path / "combo.constraint.json"
    save_json(
        combined,
        {
            "intersection": [
                {"matroid": {"kind": "uniform", "rank": 2}},
                {"knapsacks": {"weights": [[0.3, 0.3, 0.3, 0.3, 0.3, 0.3]], "capacities": [1.0]}},
            ]
        },
    )
    code = main(
        [
            "solve",
            "--instance", str(out / "instance_0002.json"),
            "--constraint", str(combined),
            "--algorithm", "matroid-knapsacks",
            "--out", str(tmp_path / "mk.json"),
        ]
    )
    assert code == 0
    data = load_json(tmp_path / "mk.json")
    assert len(data["solution_set"]) <= 2


def test_solve_wrong_constraint_errors(workspace, tmp_path, capsys):
    tmp, out = workspace
    code = main(
        [
            "solve",
            "--instance", str(out / "instance_0000.json"),
            "--constraint", str(out / "instance_0000.constraint.json"),
            "--algorithm", "knapsacks",
        ]
    )
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_verify_exit_codes(capsys):
    assert main(["verify", "--suite", "submodularity", "--trials", "400", "--seed", "2"]) == 0
    out = capsys.readouterr().out
    assert json.loads(out.splitlines()[0])["passed"] is True
    assert main(["verify", "--suite", "mystery", "--trials", "10"]) == 1


def test_verify_zero_trials_warns(capsys):
    assert main(["verify", "--suite", "submodularity", "--trials", "0"]) == 0
    captured = capsys.readouterr()
    assert "vacuous" in captured.err


def test_bench_writes_csv_and_sidecar(tmp_path):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--battery", "default", "--out", str(out), "--seed", "3"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("instance_id,")
    assert len(lines) == 21  # header + 20 cells
    sidecar = load_json(tmp_path / "bench.csv.sidecar.json")
    assert sidecar["aggregate"]["violations"] == 0


def test_bench_unknown_battery(tmp_path):
    assert main(["bench", "--battery", "other", "--out", str(tmp_path / "x.csv")]) == 1
