import csv
import json

import pytest

from gnncolor import cli, harness, schemas
from gnncolor.datasets import bundled_graph_path
from gnncolor.generators import complete, path
from gnncolor.graph import count_conflicts, format_dimacs, read_dimacs
from gnncolor.harness import EXIT_CONFLICTS, EXIT_INPUT, EXIT_OK, InputError, Settings
from gnncolor.model import ModelConfig
from gnncolor.training import OptimConfig

QUICK = Settings(ModelConfig(d0=8, d1=8), optim=OptimConfig(max_iters=400, es_window=100), restarts=2)


@pytest.fixture
def tri(tmp_path):
    p = tmp_path / "tri.col"
    p.write_text(format_dimacs(complete(3)))
    return p


@pytest.fixture
def timetable(tmp_path):
    def make(rows):
        p = tmp_path / "t.csv"
        p.write_text("id,depart,arrive\n" + "".join(f"{a},{b},{c}\n" for a, b, c in rows))
        return p

    return make


def _csv_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_solve_outputs(tri, tmp_path):
    out = tmp_path / "out"
    doc, code = harness.cmd_solve(tri, 3, QUICK, out, dot=True)
    assert code == EXIT_OK and doc["conflicts"] == 0
    assert json.loads((out / "tri_k3.json").read_text()) == doc
    rows = _csv_rows(out / "tri_k3_trajectory.csv")
    assert tuple(rows[0]) == harness.TRAJECTORY_HEADER
    assert "graph tri" in (out / "tri_k3.dot").read_text()


def test_solve_conflicts_exit_one(tri):
    doc, code = harness.cmd_solve(tri, 2, QUICK)
    assert code == EXIT_CONFLICTS and doc["conflicts"] == 1
    schemas.validate(doc)


def test_solve_input_errors(tmp_path):
    with pytest.raises(InputError):
        harness.cmd_solve(tmp_path / "missing.col", 3)
    bad = tmp_path / "bad.col"
    bad.write_text("p edge 2 1\ne 1 3\n")
    with pytest.raises(InputError):
        harness.cmd_solve(bad, 3)
    good = tmp_path / "g.col"
    good.write_text(format_dimacs(path(2)))
    with pytest.raises(InputError):
        harness.cmd_solve(good, 0)


def test_bench_recounts_and_writes(tmp_path):
    entries = harness.parse_bench_entries(["queen5-5:7", f"{bundled_graph_path('myciel5')}:6"])
    assert [e.name for e in entries] == ["queen5-5", "myciel5"]
    s = Settings(optim=OptimConfig(max_iters=300), restarts=1)
    doc, code = harness.cmd_bench(entries, s, tmp_path)
    assert code in (EXIT_OK, EXIT_CONFLICTS)
    for row in doc["rows"]:
        g = read_dimacs(row["path"])
        best = min(row["runs"], key=lambda r: r["best_assignment"]["conflicts"])
        assert count_conflicts(g, best["best_assignment"]["colors"]) == row["conflicts"]
        assert row["error_rate"] == pytest.approx(row["conflicts"] / g.m)
        assert row["reference"] == 0
    rows = _csv_rows(tmp_path / "bench.csv")
    assert tuple(rows[0]) == harness.BENCH_CSV_HEADER and len(rows) == 3
    assert "queen5-5" in (tmp_path / "bench.txt").read_text()


def test_bench_bad_entry_is_recorded_and_suite_continues(tmp_path):
    entries = harness.parse_bench_entries([f"{tmp_path / 'nope.col'}:3", "queen5-5:7"])
    s = Settings(optim=OptimConfig(max_iters=50), restarts=1)
    doc, code = harness.cmd_bench(entries, s)
    assert code == EXIT_INPUT
    assert [r["status"] for r in doc["rows"]] == ["error", "ok"]


def test_bench_entry_parsing_errors():
    for bad in ["queen5-5", "queen5-5:x", "queen5-5:0"]:
        with pytest.raises(InputError):
            harness.parse_bench_entries([bad])


def test_default_bench_entries_covers_table():
    entries = harness.default_bench_entries()
    assert len(entries) == 10 and all(e.path.exists() for e in entries)


def test_ablate_lambda_zero_arms_identical(tri, tmp_path):
    doc, _ = harness.cmd_ablate(tri, 2, lam=0.0, iters=60, settings=QUICK, out_dir=tmp_path)
    a, b = (_csv_rows(arm["csv"]) for arm in doc["arms"])
    assert a == b and len(a) == 1 + 60 // QUICK.optim.eval_every + 1
    assert tuple(a[0]) == harness.TRAJECTORY_HEADER
    schemas.validate(json.loads((tmp_path / "tri_k2_ablation.json").read_text()))


def test_ablate_runs_full_budget(tri, tmp_path):
    # zero conflicts early on must not end either arm
    doc, code = harness.cmd_ablate(tri, 3, iters=400, settings=QUICK, out_dir=tmp_path)
    assert code in (EXIT_OK, EXIT_CONFLICTS)
    assert [arm["name"] for arm in doc["arms"]] == ["utility", "combined"]
    for arm in doc["arms"]:
        assert _csv_rows(arm["csv"])[-1][0] == "400"


def test_taxi_cases(timetable):
    doc, code = harness.cmd_taxi(timetable([("a", "08:00", "08:30"), ("b", "09:00", "09:30")]), 1, QUICK)
    assert code == EXIT_OK and doc["groups"] == [["a", "b"]]
    # back-to-back rides share a taxi under half-open intervals
    doc, code = harness.cmd_taxi(timetable([("a", "08:00", "08:30"), ("b", "08:30", "09:00")]), 1, QUICK)
    assert code == EXIT_OK
    doc, code = harness.cmd_taxi(timetable([("a", "08:00", "08:30"), ("b", "08:10", "09:00")]), 1, QUICK)
    assert code == EXIT_CONFLICTS and doc["conflicting_pairs"] == [["a", "b"]]
    assert not doc["satisfiable"]


def test_taxi_bad_input(timetable, tmp_path):
    with pytest.raises(InputError):
        harness.cmd_taxi(timetable([("a", "09:00", "08:00")]), 2)
    with pytest.raises(InputError):
        harness.cmd_taxi(tmp_path / "none.csv", 2)


def test_gradcheck_passes_and_is_deterministic():
    a, code = harness.cmd_gradcheck(seed=3)
    b, _ = harness.cmd_gradcheck(seed=3)
    assert code == EXIT_OK and a == b
    names = {c["name"] for c in a["checks"]}
    assert {"matmul", "neighbor_mean", "row_softmax", "edge_dot_sum", "model_loss"} <= names


def test_gradcheck_edgeless_graph_notice():
    doc, code = harness.cmd_gradcheck(seed=0, edge_prob=0.0)
    assert code == EXIT_OK
    assert any("no edges" in n for n in doc["notices"])
    assert "neighbor_mean" not in {c["name"] for c in doc["checks"]}


def test_baselines_via_harness(tmp_path):
    q = bundled_graph_path("queen5-5")
    doc, code = harness.cmd_baseline("dsatur", q, out_dir=tmp_path)
    assert code == EXIT_OK and doc["assignment"]["conflicts"] == 0
    doc, code = harness.cmd_baseline("tabucol", q, 5)
    assert code == EXIT_OK
    with pytest.raises(InputError):
        harness.cmd_baseline("tabucol", q, None)


def test_write_json_refuses_invalid(tmp_path):
    with pytest.raises(schemas.jsonschema.ValidationError):
        harness.write_json({"schema": "gnncolor/solve/1"}, tmp_path / "x.json")
    with pytest.raises(schemas.jsonschema.ValidationError):
        schemas.validate({"schema": "other/1"})


# ------------------------------------------------------------------------ CLI


def test_cli_exit_codes(tri, tmp_path, capsys):
    quick = ["--max-iters", "300", "--restarts", "2", "--d0", "8", "--d1", "8"]
    assert cli.run(["solve", str(tri), "-k", "3", *quick]) == EXIT_OK
    assert cli.run(["solve", str(tri), "-k", "2", *quick]) == EXIT_CONFLICTS
    assert cli.run(["solve", str(tmp_path / "missing.col"), "-k", "3"]) == EXIT_INPUT
    assert cli.run(["solve", str(tri), "-k", "3", "--dropout", "1.5"]) == EXIT_INPUT
    with pytest.raises(SystemExit) as exc:
        cli.run(["solve", str(tri)])
    assert exc.value.code == EXIT_INPUT
    with pytest.raises(SystemExit) as exc:
        cli.run(["nonsense"])
    assert exc.value.code == EXIT_INPUT
    assert cli.run(["bench", "--none"]) == EXIT_OK
    assert cli.run(["baseline", "dsatur", str(tri)]) == EXIT_OK


def test_cli_json_output(tri, capsys):
    assert cli.run(["--json", "baseline", "dsatur", str(tri)]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    schemas.validate(doc)
    assert doc["assignment"]["k"] == 3


def test_cli_flags_reach_configs():
    args = cli.build_parser().parse_args(
        ["solve", "x.col", "-k", "3", "--lambda", "0.5", "--conv-sign", "intent", "--lr", "0.01",
         "--no-early-stop", "--restarts", "3", "--train-embeddings", "--seed", "9"]
    )
    s = cli._settings(args)
    assert s.loss.lam == 0.5 and s.loss.conv_sign == "intent"
    assert s.optim.lr == 0.01 and not s.optim.early_stopping
    assert s.n_restarts == 3 and s.model.train_embeddings and s.seed == 9
