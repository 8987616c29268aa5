"""Command-line entry point: ``gnncolor <subcommand> ...``.

Exit codes: 0 zero conflicts (or all checks passed), 1 positive conflicts
(or a failed check), 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from . import harness
from .baselines import TabuConfig
from .datasets import sample_timetable_path
from .harness import EXIT_INPUT, InputError, Settings
from .model import ModelConfig
from .objectives import LossConfig
from .training import OptimConfig


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _training_flags(p: argparse.ArgumentParser, restarts: bool = True) -> None:
    g = p.add_argument_group("model and training")
    g.add_argument("--lambda", dest="lam", type=float, help="confidence-term weight (default 0.25)")
    g.add_argument("--conv-sign", choices=["intent", "literal"], help="sign of the confidence term")
    g.add_argument("--lr", type=float, help="AdamW learning rate")
    g.add_argument("--weight-decay", type=float)
    g.add_argument("--d0", type=int, help="input embedding width")
    g.add_argument("--d1", type=int, help="hidden width")
    g.add_argument("--dropout", type=float, help="dropout probability between the layers")
    g.add_argument("--activation", choices=["identity", "relu", "leaky_relu"])
    g.add_argument("--train-embeddings", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--max-iters", type=int)
    g.add_argument("--eval-every", type=int)
    g.add_argument("--no-early-stop", action="store_true")
    g.add_argument("--seed", type=int, default=0, help="first seed; restarts use seed, seed+1, ...")
    if restarts:
        g.add_argument("--restarts", type=int)


def _settings(args) -> Settings:
    model = ModelConfig()
    loss = LossConfig()
    optim = OptimConfig()
    pick = lambda name: getattr(args, name, None)  # noqa: E731
    m = {k: v for k, v in dict(
        d0=pick("d0"), d1=pick("d1"), dropout_p=pick("dropout"), activation=pick("activation"),
        train_embeddings=pick("train_embeddings"),
    ).items() if v is not None}
    lo = {k: v for k, v in dict(lam=pick("lam"), conv_sign=pick("conv_sign")).items() if v is not None}
    o = {k: v for k, v in dict(
        lr=pick("lr"), weight_decay=pick("weight_decay"), max_iters=pick("max_iters"),
        eval_every=pick("eval_every"), restarts=pick("restarts"),
    ).items() if v is not None}
    if pick("no_early_stop"):
        o["early_stopping"] = False
    try:
        return Settings(replace(model, **m), replace(loss, **lo), replace(optim, **o), seed=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gnncolor", description="Unsupervised GNN graph coloring with negative message passing.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--json", action="store_true", help="print the JSON document instead of a summary")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="color one DIMACS graph with k colors")
    s.add_argument("graph", help="DIMACS .col file")
    s.add_argument("-k", "--colors", type=int, required=True)
    s.add_argument("-o", "--out", help="output directory for JSON/CSV/DOT")
    s.add_argument("--dot", action="store_true", help="also write a DOT rendering")
    _training_flags(s)

    b = sub.add_parser("bench", help="run the COLOR benchmark rows")
    b.add_argument("entries", nargs="*", help="NAME:K or PATH.col:K (default: the ten published rows)")
    b.add_argument("--data-dir", help="directory holding the .col files (default: bundled copies)")
    b.add_argument("--none", action="store_true", help="run an empty suite")
    b.add_argument("--all-restarts", action="store_true", help="keep restarting after a zero-conflict run")
    b.add_argument("-o", "--out", help="output directory")
    _training_flags(b)

    a = sub.add_parser("ablate", help="utility-only vs combined loss trajectories")
    a.add_argument("graph")
    a.add_argument("-k", "--colors", type=int, required=True)
    a.add_argument("--iters", type=int, default=100_000)
    a.add_argument("-o", "--out", required=True)
    _training_flags(a, restarts=False)

    t = sub.add_parser("taxi", help="assign ride requests to k taxis")
    t.add_argument("timetable", nargs="?", help="CSV with id,depart,arrive (default: bundled sample)")
    t.add_argument("-k", "--taxis", type=int, default=4)
    t.add_argument("-o", "--out")
    _training_flags(t)

    gc = sub.add_parser("gradcheck", help="finite-difference checks of every differentiable op")
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--nodes", type=int, default=6)
    gc.add_argument("--dims", type=int, nargs=3, default=(4, 5, 3), metavar=("D0", "D1", "K"))
    gc.add_argument("--edge-prob", type=float, default=0.5)
    gc.add_argument("-o", "--out")

    bl = sub.add_parser("baseline", help="classical comparators")
    bl.add_argument("method", choices=["dsatur", "tabucol"])
    bl.add_argument("graph")
    bl.add_argument("-k", "--colors", type=int)
    bl.add_argument("--max-moves", type=int, default=TabuConfig.max_moves)
    bl.add_argument("--seed", type=int, default=0)
    bl.add_argument("-o", "--out")
    return p


def _summary(doc: dict) -> str:
    kind = doc["schema"].split("/")[1]
    if kind == "solve":
        b = doc["best"]
        return (
            f"{doc['graph']['name']}: k={doc['k']} conflicts={doc['conflicts']} "
            f"seed={b['seed']} iterations={b['iterations_run']} stop={b['stop_reason']} "
            f"time={b['wall_time_seconds']:.1f}s"
        )
    if kind == "bench":
        return harness.render_bench_table(doc)
    if kind == "ablate":
        lines = [f"{doc['graph']['name']} k={doc['k']} lambda={doc['lambda']}"]
        for arm in doc["arms"]:
            lines.append(
                f"  {arm['name']:<9} best={arm['best_conflicts']} final={arm['final_conflicts']} "
                f"variation={arm['conflict_variation']} upward_jumps={arm['upward_jumps']} {arm['csv']}"
            )
        return "\n".join(lines)
    if kind == "taxi":
        lines = [f"taxis={doc['k']} conflicts={doc['conflicts']} satisfiable={doc['satisfiable']}"]
        lines += [f"  taxi {i + 1}: {', '.join(g)}" for i, g in enumerate(doc["groups"])]
        return "\n".join(lines)
    if kind == "gradcheck":
        lines = [f"  {c['name']:<14} rel={c['max_rel_error']:.2e} abs={c['max_abs_error']:.2e} "
                 f"{'ok' if c['passed'] else 'FAIL'}" for c in doc["checks"]]
        lines += [f"  notice: {n}" for n in doc.get("notices", [])]
        return "\n".join(lines)
    a = doc["assignment"]
    return f"{doc['method']} on {doc['graph']['name']}: k={a['k']} conflicts={a['conflicts']}"


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        if args.command == "solve":
            doc, code = harness.cmd_solve(args.graph, args.colors, _settings(args), args.out, dot=args.dot)
        elif args.command == "bench":
            if args.none:
                entries = []
            elif args.entries:
                entries = harness.parse_bench_entries(args.entries, args.data_dir)
            else:
                entries = harness.default_bench_entries(args.data_dir)
            doc, code = harness.cmd_bench(entries, _settings(args), args.out, all_restarts=args.all_restarts)
        elif args.command == "ablate":
            s = _settings(args)
            doc, code = harness.cmd_ablate(args.graph, args.colors, s.loss.lam, args.iters, s, args.out)
        elif args.command == "taxi":
            path = args.timetable or sample_timetable_path()
            doc, code = harness.cmd_taxi(path, args.taxis, _settings(args), args.out)
        elif args.command == "gradcheck":
            doc, code = harness.cmd_gradcheck(args.seed, args.nodes, tuple(args.dims), args.edge_prob, args.out)
        else:
            tabu = TabuConfig(max_moves=args.max_moves, seed=args.seed)
            doc, code = harness.cmd_baseline(args.method, args.graph, args.colors, tabu, args.out)
    except InputError as exc:
        print(f"gnncolor: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(json.dumps(doc, indent=1) if args.json else _summary(doc))
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
