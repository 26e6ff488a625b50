import json
from pathlib import Path

import pytest

from handsoff.cli import main

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def run(args):
    return main([str(a) for a in args])


def load(path: Path) -> dict:
    return json.loads(path.read_text())


def test_solve_writes_document_and_csv(tmp_path):
    out = tmp_path / "result.json"
    csv = tmp_path / "traj.csv"
    code = run(["solve", "--input", PROBLEMS / "double_integrator.json",
                "--out", out, "--csv", csv])
    assert code == 0
    doc = load(out)
    assert doc["schema"] == "handsoff-result/1"
    assert doc["status"] == "optimal"
    assert doc["problem"]["N"] == 100
    assert doc["sparsity"]["hands_off_ratio"] > 0.9
    lines = csv.read_text().strip().split("\n")
    assert lines[0] == "t,u1,x1,x2"
    assert len(lines) == 102  # header + N+1 grid points


def test_solve_infeasible_exit_code(tmp_path):
    out = tmp_path / "result.json"
    code = run(["solve", "--input", PROBLEMS / "infeasible_scalar.json", "--out", out])
    assert code == 2
    doc = load(out)
    assert doc["status"] == "infeasible"
    assert doc["objective"] is None


def test_solve_missing_file_exit_code(tmp_path, capsys):
    code = run(["solve", "--input", tmp_path / "nope.json"])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_solve_rejects_bad_tolerance():
    code = run(["solve", "--input", PROBLEMS / "scalar_integrator.json",
                "--opt-tol", "-1"])
    assert code == 1


def test_solve_stdout_document(capsys):
    code = run(["solve", "--input", PROBLEMS / "scalar_integrator.json"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["status"] == "optimal"


def test_compare_orders_ratios(tmp_path):
    out = tmp_path / "cmp.json"
    csv = tmp_path / "cmp.csv"
    code = run(["compare", "--input", PROBLEMS / "double_integrator.json",
                "--out", out, "--csv", csv])
    assert code == 0
    doc = load(out)
    l1 = doc["l1"]["sparsity"]["hands_off_ratio"]
    l2 = doc["min_energy"]["sparsity"]["hands_off_ratio"]
    assert l1 > l2
    assert csv.exists()
    assert (tmp_path / "cmp_min_energy.csv").exists()


def test_compare_zero_state_both_idle(tmp_path):
    prob = tmp_path / "p.json"
    prob.write_text(json.dumps({"A": [[0.0]], "B": [[1.0]], "x0": [0.0],
                                "T": 1.0, "N": 5}))
    out = tmp_path / "cmp.json"
    assert run(["compare", "--input", prob, "--out", out]) == 0
    doc = load(out)
    assert doc["l1"]["sparsity"]["hands_off_ratio"] == 1.0
    assert doc["min_energy"]["sparsity"]["hands_off_ratio"] == 1.0


def test_compare_rank_deficient_documented(tmp_path):
    prob = tmp_path / "p.json"
    prob.write_text(json.dumps({"A": [[0.0]], "B": [[0.0]], "x0": [0.0],
                                "T": 1.0, "N": 4}))
    out = tmp_path / "cmp.json"
    code = run(["compare", "--input", prob, "--out", out])
    doc = load(out)  # document stays well-formed
    assert doc["min_energy"]["status"] == "rank_deficient"
    assert code == 0


def test_sweep_horizon_grid(tmp_path):
    prob = tmp_path / "p.json"
    prob.write_text(json.dumps({"A": [[0.0, 1.0], [0.0, 0.0]], "B": [[0.0], [1.0]],
                                "x0": [1.0, 0.0], "T": 5.0, "N": 50}))
    out = tmp_path / "sweep.json"
    code = run(["sweep", "--input", prob, "--sweep-T", "5,7.5,10", "--out", out])
    assert code == 0
    doc = load(out)
    assert [row["T"] for row in doc["rows"]] == [5.0, 7.5, 10.0]
    assert all(row["status"] == "optimal" for row in doc["rows"])
    values = [row["objective"] for row in doc["rows"]]
    assert values[0] >= values[1] >= values[2]
    assert doc["objective_nonincreasing"] is True


def test_sweep_single_point_matches_solve(tmp_path):
    out_sweep = tmp_path / "sweep.json"
    out_solve = tmp_path / "solve.json"
    run(["sweep", "--input", PROBLEMS / "double_integrator.json",
         "--sweep-T", "10", "--out", out_sweep])
    run(["solve", "--input", PROBLEMS / "double_integrator.json",
         "--out", out_solve])
    row = load(out_sweep)["rows"][0]
    solved = load(out_solve)
    assert row["objective"] == solved["objective"]
    assert row["iterations"] == solved["iterations"]


def test_sweep_flags_infeasible_row_and_continues(tmp_path):
    prob = tmp_path / "p.json"
    prob.write_text(json.dumps({"A": [[0.0]], "B": [[1.0]], "x0": [1.5],
                                "T": 2.0, "N": 20}))
    out = tmp_path / "sweep.json"
    code = run(["sweep", "--input", prob, "--sweep-T", "1,2,4", "--out", out])
    assert code == 0
    rows = load(out)["rows"]
    assert rows[0]["status"] == "infeasible"  # reachable set [-1,1] misses 1.5
    assert rows[1]["status"] == "optimal"
    assert rows[2]["status"] == "optimal"


def test_sweep_requires_grid():
    assert run(["sweep", "--input", PROBLEMS / "double_integrator.json"]) == 1


def test_sweep_weight_scaling(tmp_path):
    out = tmp_path / "sweep.json"
    code = run(["sweep", "--input", PROBLEMS / "scalar_integrator.json",
                "--sweep-scale", "1,10", "--out", out])
    assert code == 0
    rows = load(out)["rows"]
    assert rows[1]["objective"] == pytest.approx(10 * rows[0]["objective"], rel=1e-6)


def test_verify_equivalence_agrees(tmp_path):
    out = tmp_path / "eq.json"
    code = run(["verify-equivalence", "--input", PROBLEMS / "double_integrator_n8.json",
                "--out", out])
    assert code == 0
    doc = load(out)
    assert doc["agree"] is True
    assert doc["l1_support"] == doc["l0_support"] == 2


def test_verify_equivalence_no_polish_disagrees(tmp_path):
    out = tmp_path / "eq.json"
    code = run(["verify-equivalence", "--input", PROBLEMS / "scalar_integrator.json",
                "--no-polish", "--out", out])
    assert code == 3
    doc = load(out)
    assert doc["agree"] is False
    assert doc["l1_support"] == 8
    assert doc["l0_support"] == 4


def test_verify_equivalence_bound_exceeded(tmp_path):
    prob = tmp_path / "p.json"
    prob.write_text(json.dumps({"A": [[0.0]], "B": [[1.0]], "x0": [1.0],
                                "T": 2.0, "N": 30}))
    assert run(["verify-equivalence", "--input", prob]) == 1


def test_simulate_document_and_fine_csv(tmp_path):
    out = tmp_path / "sim.json"
    csv = tmp_path / "sim.csv"
    code = run(["simulate", "--input", PROBLEMS / "scalar_integrator.json",
                "--substeps", "5", "--out", out, "--csv", csv])
    assert code == 0
    doc = load(out)
    assert doc["substeps"] == 5
    assert doc["continuous_terminal_error"] <= 1e-6
    assert doc["max_gridpoint_gap"] <= 1e-9
    lines = csv.read_text().strip().split("\n")
    assert len(lines) == 8 * 5 + 2  # header + N*substeps + 1 points


def test_documents_are_deterministic(tmp_path):
    docs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        assert run(["solve", "--input", PROBLEMS / "double_integrator.json",
                    "--out", out, "--csv", tmp_path / ("csv_" + name)]) == 0
        doc = load(out)
        doc.pop("wall_time_sec")
        docs.append(json.dumps(doc, sort_keys=True))
    assert docs[0] == docs[1]
    csv_a = (tmp_path / "csv_a.json").read_text()
    csv_b = (tmp_path / "csv_b.json").read_text()
    assert csv_a == csv_b


def test_solve_matches_committed_golden_document(tmp_path):
    golden_path = Path(__file__).resolve().parent / "golden" / "double_integrator.result.json"
    out = tmp_path / "run.json"
    assert run(["solve", "--input", PROBLEMS / "double_integrator.json",
                "--out", out]) == 0
    got = load(out)
    expected = load(golden_path)
    got.pop("wall_time_sec")
    expected.pop("wall_time_sec")
    assert json.dumps(got, sort_keys=True) == json.dumps(expected, sort_keys=True)
