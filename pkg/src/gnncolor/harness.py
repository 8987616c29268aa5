"""Implementations behind the CLI subcommands.

Every ``cmd_*`` function returns ``(document, exit_code)``; documents are
JSON-serialisable and validate against :mod:`gnncolor.schemas`. Exit codes:
0 when the reported coloring has zero conflicts, 1 when it has some, 2 on
input errors.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import diffmath as dm
from . import schemas
from .baselines import TabuConfig, dsatur, tabucol
from .datasets import COLOR_TABLE, TABLE_BY_NAME, bundled_graph_path
from .generators import random_graph
from .graph import (
    Graph,
    GraphFormatError,
    count_conflicts,
    encode_intervals,
    export_dot,
    read_dimacs,
    read_timetable,
)
from .model import ModelConfig, ModelParams, forward, init_params
from .objectives import LossConfig, total_loss
from .training import OptimConfig, RunReport, TrainingError, train_multi, train_once

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFLICTS, EXIT_INPUT = 0, 1, 2
TRAJECTORY_HEADER = ("iteration", "loss", "conflicts")
BENCH_CSV_HEADER = (
    "graph",
    "k",
    "nodes",
    "edges",
    "conflicts",
    "reference",
    "colors_used",
    "error_rate",
    "iterations",
    "restarts_run",
    "best_run_seconds",
    "total_seconds",
    "status",
)


class InputError(Exception):
    """Bad user input (unreadable file, invalid value); maps to exit code 2."""


@dataclass
class Settings:
    """Everything a training command needs besides the graph and ``k``."""

    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    restarts: int | None = None
    seed: int = 0

    @property
    def n_restarts(self) -> int:
        return self.optim.restarts if self.restarts is None else self.restarts


def _exit_for(conflicts: int) -> int:
    return EXIT_OK if conflicts == 0 else EXIT_CONFLICTS


def load_graph_arg(path) -> Graph:
    try:
        return read_dimacs(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except (GraphFormatError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


def graph_info(name: str, g: Graph) -> dict:
    return {"name": name, "nodes": g.n, "edges": g.m, "edge_count_mismatch": g.edge_count_mismatch}


def write_json(doc: dict, path: Path) -> None:
    schemas.validate(doc)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def write_trajectory_csv(report: RunReport, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        for it, loss, c in report.trajectory_rows():
            w.writerow((it, "" if math.isnan(loss) else repr(loss), c))


def _train(g: Graph, k: int, s: Settings, target: int | None = None):
    if k < 1:
        raise InputError("k must be >= 1")
    return train_multi(g, k, s.model, s.loss, s.optim, restarts=s.n_restarts, seed0=s.seed, target=target)


# ---------------------------------------------------------------------- solve


def cmd_solve(
    graph_path,
    k: int,
    settings: Settings | None = None,
    out_dir=None,
    dot: bool = False,
    trajectories: bool = True,
) -> tuple[dict, int]:
    s = settings or Settings()
    g = load_graph_arg(graph_path)
    best, reports = _train(g, k, s)
    conflicts = count_conflicts(g, best.best_assignment.colors)
    doc = {
        "schema": schemas.SOLVE["$id"],
        "graph": graph_info(Path(graph_path).stem, g),
        "k": k,
        "conflicts": conflicts,
        "colors_used": best.best_assignment.colors_used(),
        "best": best.to_dict(trajectories=trajectories),
        "runs": [r.to_dict(trajectories=False) for r in reports],
    }
    schemas.validate(doc)
    if out_dir is not None:
        out = Path(out_dir)
        stem = Path(graph_path).stem
        write_json(doc, out / f"{stem}_k{k}.json")
        write_trajectory_csv(best, out / f"{stem}_k{k}_trajectory.csv")
        if dot:
            (out / f"{stem}_k{k}.dot").write_text(export_dot(g, best.best_assignment, name=_dot_id(stem)))
    return doc, _exit_for(conflicts)


def _dot_id(stem: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in stem) or "G"


# ---------------------------------------------------------------------- bench


@dataclass(frozen=True)
class BenchEntry:
    name: str
    path: Path
    k: int


def default_bench_entries(data_dir=None) -> list[BenchEntry]:
    """The ten published COLOR rows with their color numbers."""
    entries = []
    for row in COLOR_TABLE:
        path = bundled_graph_path(row.name) if data_dir is None else Path(data_dir) / bundled_graph_path(row.name).name
        entries.append(BenchEntry(row.name, path, row.k))
    return entries


def parse_bench_entries(items: list[str], data_dir=None) -> list[BenchEntry]:
    """``name:k`` (bundled or in ``data_dir``) or ``path.col:k`` items."""
    out = []
    for item in items:
        ref, sep, k = item.rpartition(":")
        if not sep:
            raise InputError(f"bench entry {item!r} must look like NAME:K")
        try:
            kk = int(k)
        except ValueError:
            raise InputError(f"bench entry {item!r}: k is not an integer") from None
        if kk < 1:
            raise InputError(f"bench entry {item!r}: k must be >= 1")
        if ref.endswith(".col"):
            path = Path(ref)
            name = path.stem.replace("_", "-")
        else:
            name = ref
            path = bundled_graph_path(ref)
            if data_dir is not None:
                path = Path(data_dir) / path.name
        out.append(BenchEntry(name, path, kk))
    return out


def cmd_bench(
    entries: list[BenchEntry],
    settings: Settings | None = None,
    out_dir=None,
    all_restarts: bool = False,
) -> tuple[dict, int]:
    """Run every entry; per-entry failures are recorded and the suite continues.

    Unless ``all_restarts`` is set, an entry stops restarting once a run
    reaches zero conflicts.
    """
    s = settings or Settings()
    rows = []
    for e in entries:
        row = {"graph": e.name, "path": str(e.path), "k": e.k, "status": "ok", "error": None}
        ref = TABLE_BY_NAME.get(e.name)
        row["reference"] = None if ref is None or ref.k != e.k else ref.gnn_1n
        try:
            g = load_graph_arg(e.path)
            start = time.monotonic()
            best, reports = _train(g, e.k, s, target=None if all_restarts else 0)
            total = time.monotonic() - start
        except (InputError, TrainingError, ValueError) as exc:
            row.update(status="error", error=str(exc))
            log.error("%s: %s", e.name, exc)
            rows.append(row)
            continue
        conflicts = count_conflicts(g, best.best_assignment.colors)
        iters = best.iterations_run
        row.update(
            nodes=g.n,
            edges=g.m,
            conflicts=conflicts,
            colors_used=best.best_assignment.colors_used(),
            error_rate=conflicts / g.m if g.m else 0.0,
            iterations=iters,
            best_seed=best.seed,
            restarts_run=len(reports),
            best_run_seconds=best.wall_time_seconds,
            total_seconds=total,
            seconds_per_1e5_iters=(best.wall_time_seconds / iters * 1e5) if iters else 0.0,
            runs=[r.to_dict(trajectories=False) for r in reports],
        )
        log.info("%s k=%d: %d conflicts (%.1fs)", e.name, e.k, conflicts, total)
        rows.append(row)
    doc = {"schema": schemas.BENCH["$id"], "restarts": s.n_restarts, "rows": rows}
    schemas.validate(doc)
    if out_dir is not None:
        out = Path(out_dir)
        write_json(doc, out / "bench.json")
        with open(out / "bench.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(BENCH_CSV_HEADER)
            for r in rows:
                w.writerow([r.get(c, "") if r.get(c) is not None else "" for c in BENCH_CSV_HEADER])
        (out / "bench.txt").write_text(render_bench_table(doc))
    if any(r["status"] == "error" for r in rows):
        code = EXIT_INPUT
    elif any(r["conflicts"] > 0 for r in rows):
        code = EXIT_CONFLICTS
    else:
        code = EXIT_OK
    return doc, code


def render_bench_table(doc: dict) -> str:
    head = f"{'Graph':<12}{'Nodes':>6}{'Edges':>7}{'k':>4}{'Conflicts':>10}{'Published':>10}{'Error %':>9}{'Iters':>8}{'Seconds':>9}"
    lines = [head, "-" * len(head)]
    for r in doc["rows"]:
        if r["status"] != "ok":
            lines.append(f"{r['graph']:<12}  error: {r['error']}")
            continue
        ref = "-" if r["reference"] is None else str(r["reference"])
        lines.append(
            f"{r['graph']:<12}{r['nodes']:>6}{r['edges']:>7}{r['k']:>4}{r['conflicts']:>10}{ref:>10}"
            f"{100 * r['error_rate']:>9.2f}{r['iterations']:>8}{r['best_run_seconds']:>9.1f}"
        )
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------- ablate


def _variation(report: RunReport) -> tuple[int, int]:
    c = [x for _, x in report.conflict_trajectory]
    diffs = np.diff(c) if len(c) > 1 else np.zeros(0)
    return int(np.abs(diffs).sum()), int((diffs > 0).sum())


def cmd_ablate(
    graph_path,
    k: int,
    lam: float = 0.25,
    iters: int = 100_000,
    settings: Settings | None = None,
    out_dir=None,
) -> tuple[dict, int]:
    """Train twice from the same seed: utility only, then utility plus the
    confidence term weighted by ``lam``. Both runs use the full iteration
    budget (no early exit) so the two trajectories are comparable.
    """
    s = settings or Settings()
    g = load_graph_arg(graph_path)
    if k < 1:
        raise InputError("k must be >= 1")
    optim = replace(s.optim, max_iters=iters, early_stopping=False)
    stem = Path(graph_path).stem
    out = Path(out_dir) if out_dir is not None else None
    arms = []
    best_overall = None
    for arm, weight in (("utility", 0.0), ("combined", lam)):
        r = train_once(g, k, s.model, replace(s.loss, lam=weight), optim, seed=s.seed, stop_at_zero=False)
        variation, ups = _variation(r)
        entry = {
            "name": arm,
            "lambda": weight,
            "csv": "" if out is None else str(out / f"{stem}_k{k}_{arm}.csv"),
            "best_conflicts": r.best_conflicts,
            "final_conflicts": r.conflict_trajectory[-1][1],
            "conflict_variation": variation,
            "upward_jumps": ups,
        }
        if out is not None:
            write_trajectory_csv(r, Path(entry["csv"]))
        arms.append(entry)
        best_overall = r.best_conflicts if best_overall is None else min(best_overall, r.best_conflicts)
    doc = {
        "schema": schemas.ABLATE["$id"],
        "graph": graph_info(stem, g),
        "k": k,
        "lambda": lam,
        "iterations": iters,
        "arms": arms,
    }
    if out is not None:
        write_json(doc, out / f"{stem}_k{k}_ablation.json")
    schemas.validate(doc)
    return doc, _exit_for(best_overall)


# ----------------------------------------------------------------------- taxi


def cmd_taxi(timetable_path, k: int, settings: Settings | None = None, out_dir=None) -> tuple[dict, int]:
    s = settings or Settings()
    try:
        t = read_timetable(timetable_path)
    except OSError as exc:
        raise InputError(f"cannot read {timetable_path}: {exc.strerror or exc}") from None
    except (GraphFormatError, ValueError) as exc:
        raise InputError(f"{timetable_path}: {exc}") from None
    g = encode_intervals(t)
    best, _ = _train(g, k, s, target=0)
    colors = best.best_assignment.colors
    ids = t.ids
    groups = [[ids[v] for v in range(g.n) if colors[v] == c] for c in range(k)]
    groups = [grp for grp in groups if grp]
    clashes = [[ids[u], ids[v]] for u, v in g.edges if colors[u] == colors[v]]
    conflicts = count_conflicts(g, colors)
    doc = {
        "schema": schemas.TAXI["$id"],
        "k": k,
        "requests": len(ids),
        "conflicts": conflicts,
        "satisfiable": conflicts == 0,
        "groups": groups,
        "conflicting_pairs": clashes,
        "dsatur_colors": dsatur(g).k,
        "best": best.to_dict(trajectories=False),
    }
    schemas.validate(doc)
    if out_dir is not None:
        write_json(doc, Path(out_dir) / "taxi.json")
    return doc, _exit_for(conflicts)


# ------------------------------------------------------------------ gradcheck


def run_gradchecks(seed: int = 0, n: int = 6, dims=(4, 5, 3), edge_prob: float = 0.5):
    """Finite-difference checks of every differentiable op and the full loss.

    Returns ``(results, notices)``.
    """
    rng = np.random.default_rng(seed)
    g = random_graph(n, edge_prob, rng)
    plan = dm.AggregationPlan.from_graph(g)
    d0, d1, k = dims
    notices = []

    def away_from_zero(x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) < 1e-2, 0.1, x)

    A = rng.normal(size=(n, d0))
    B = rng.normal(size=(d0, d1))
    C = rng.normal(size=(n, d0))
    S = np.array([[0.7]])
    weights = rng.normal(size=(n, d0))
    checks = [
        ("matmul", lambda t, p: dm.sum_all(dm.mul(dm.matmul(p["a"], p["b"]), t.constant(np.ones((n, d1))))), {"a": A, "b": B}),
        ("add", lambda t, p: dm.sum_all(dm.mul(dm.add(p["a"], p["c"]), p["a"])), {"a": A, "c": C}),
        ("sub", lambda t, p: dm.sum_all(dm.mul(dm.sub(p["a"], p["c"]), p["c"])), {"a": A, "c": C}),
        ("mul", lambda t, p: dm.sum_all(dm.mul(dm.mul(p["a"], p["s"]), p["c"])), {"a": A, "c": C, "s": S}),
        ("abs", lambda t, p: dm.sum_all(dm.mul(dm.absolute(p["a"]), t.constant(weights))), {"a": away_from_zero(A)}),
        ("leaky_relu", lambda t, p: dm.sum_all(dm.mul(dm.leaky_relu(p["a"], 0.01), t.constant(weights))), {"a": away_from_zero(A)}),
        ("row_softmax", lambda t, p: dm.sum_all(dm.mul(dm.row_softmax(p["a"]), t.constant(weights))), {"a": A}),
        ("log", lambda t, p: dm.sum_all(dm.log(dm.mul(p["a"], p["a"]), 1e-3)), {"a": away_from_zero(A)}),
        ("dropout", lambda t, p: dm.sum_all(dm.mul(dm.dropout(p["a"], 0.3, np.random.default_rng(seed), True), t.constant(weights))), {"a": A}),
    ]
    if g.m:
        checks.append(("neighbor_mean", lambda t, p: dm.sum_all(dm.mul(dm.neighbor_mean(plan, p["a"]), t.constant(weights))), {"a": A}))
        checks.append(("edge_dot_sum", lambda t, p: dm.edge_dot_sum(g.edge_array(), p["a"]), {"a": A}))
    else:
        notices.append("graph has no edges: neighbor_mean and edge_dot_sum checks skipped")

    cfg = ModelConfig(d0=d0, d1=d1, k=k, dropout_p=0.2, train_embeddings=True, seed=seed)
    params = init_params(g, cfg)
    loss_cfg = LossConfig(lam=0.25)
    results = [dm.gradcheck(name, build, inputs) for name, build, inputs in checks]
    results.append(_model_gradcheck(plan, g, params, cfg, loss_cfg, seed))
    return results, notices


def _model_gradcheck(plan, g, params: ModelParams, cfg: ModelConfig, loss_cfg: LossConfig, seed: int):
    """End-to-end check of the model loss w.r.t. every parameter."""
    arrays = params.arrays()

    def loss_value(p: ModelParams) -> tuple[float, dict]:
        fwd = forward(plan, p, cfg, training=True, rng=np.random.default_rng(seed + 1))
        loss = total_loss(g, fwd.P, loss_cfg)
        return loss.item(), dm.backward(fwd.tape, loss)

    _, analytic = loss_value(params)
    worst_rel = worst_abs = 0.0
    ok = True
    for name, arr in arrays.items():
        numeric = dm.numerical_gradient(lambda: loss_value(params)[0], arr, 1e-5)
        rel, ab, passed = dm.compare_gradients(analytic[name], numeric)
        worst_rel, worst_abs = max(worst_rel, rel), max(worst_abs, ab)
        ok = ok and passed
    return dm.GradCheckResult("model_loss", worst_rel, worst_abs, ok)


def cmd_gradcheck(seed: int = 0, n: int = 6, dims=(4, 5, 3), edge_prob: float = 0.5, out_dir=None) -> tuple[dict, int]:
    results, notices = run_gradchecks(seed, n, dims, edge_prob)
    doc = {
        "schema": schemas.GRADCHECK["$id"],
        "seed": seed,
        "passed": all(r.passed for r in results),
        "notices": notices,
        "checks": [
            {"name": r.name, "max_rel_error": r.max_rel_error, "max_abs_error": r.max_abs_error, "passed": r.passed}
            for r in results
        ],
    }
    schemas.validate(doc)
    if out_dir is not None:
        write_json(doc, Path(out_dir) / "gradcheck.json")
    return doc, EXIT_OK if doc["passed"] else EXIT_CONFLICTS


# ------------------------------------------------------------------- baseline


def cmd_baseline(method: str, graph_path, k: int | None = None, tabu: TabuConfig | None = None, out_dir=None) -> tuple[dict, int]:
    g = load_graph_arg(graph_path)
    start = time.monotonic()
    extra = {}
    if method == "dsatur":
        a = dsatur(g)
    elif method == "tabucol":
        if k is None or k < 1:
            raise InputError("tabucol needs k >= 1")
        res = tabucol(g, k, tabu)
        a = res.assignment
        extra = {"moves": res.moves, "initial_conflicts": res.initial_conflicts}
    else:
        raise InputError(f"unknown baseline {method!r}")
    doc = {
        "schema": schemas.BASELINE["$id"],
        "method": method,
        "graph": graph_info(Path(graph_path).stem, g),
        "assignment": a.to_dict(),
        "wall_time_seconds": time.monotonic() - start,
        **extra,
    }
    schemas.validate(doc)
    if out_dir is not None:
        write_json(doc, Path(out_dir) / f"{Path(graph_path).stem}_{method}.json")
    return doc, _exit_for(a.conflicts)
