"""AdamW training loop, early stopping and multi-seed restarts."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import diffmath as dm
from .graph import Assignment, Graph, count_conflicts
from .model import WEIGHT_NAMES, ModelConfig, ModelParams, extract_assignment, forward, init_params
from .objectives import LossConfig, total_loss

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimConfig:
    lr: float = 3e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_opt: float = 1e-8
    weight_decay: float = 1e-2
    max_iters: int = 100_000
    es_window: int = 1_000
    es_delta: float = 1e-3
    restarts: int = 5
    eval_every: int = 10
    early_stopping: bool = True

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.es_window < 1 or self.eval_every < 1 or self.restarts < 1:
            raise ValueError("es_window, eval_every and restarts must be >= 1")


class AdamW:
    """Adam with decoupled weight decay, applied to the weight matrices only."""

    def __init__(self, cfg: OptimConfig, decay_names=WEIGHT_NAMES):
        self.cfg = cfg
        self.decay_names = frozenset(decay_names)
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: ModelParams, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        adamw_step(params, grads, self.m, self.v, self.cfg, self.t, self.decay_names)


def adamw_step(
    params: ModelParams,
    grads: dict[str, np.ndarray],
    m: dict[str, np.ndarray],
    v: dict[str, np.ndarray],
    cfg: OptimConfig,
    t: int,
    decay_names=WEIGHT_NAMES,
) -> None:
    """One in-place AdamW update of every parameter that has a gradient."""
    if t < 1:
        raise ValueError("step index starts at 1")
    b1, b2 = cfg.beta1, cfg.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for name, g in grads.items():
        theta = getattr(params, name)
        if g.shape != theta.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {theta.shape} for {name}")
        if not np.isfinite(g).all():
            raise dm.NonFiniteError(f"non-finite gradient for {name}")
        if name not in m:
            m[name] = np.zeros_like(theta)
            v[name] = np.zeros_like(theta)
        mt, vt = m[name], v[name]
        mt *= b1
        mt += (1 - b1) * g
        vt *= b2
        vt += (1 - b2) * (g * g)
        denom = np.sqrt(vt / c2)
        denom += cfg.eps_opt
        update = (mt / c1) / denom
        if name in decay_names and cfg.weight_decay:
            update += cfg.weight_decay * theta
        theta -= cfg.lr * update


@dataclass
class RunReport:
    seed: int
    model: ModelConfig
    loss: LossConfig
    optim: OptimConfig
    loss_trajectory: list[float] = field(default_factory=list)
    conflict_trajectory: list[tuple[int, int]] = field(default_factory=list)
    best_assignment: Assignment | None = None
    best_iteration: int = -1
    iterations_run: int = 0
    stop_reason: str = "max_iters"
    wall_time_seconds: float = 0.0
    error: str | None = None

    @property
    def best_conflicts(self) -> int | None:
        return None if self.best_assignment is None else self.best_assignment.conflicts

    @property
    def final_loss(self) -> float:
        return self.loss_trajectory[-1] if self.loss_trajectory else float("inf")

    def to_dict(self, trajectories: bool = True) -> dict:
        d = {
            "seed": self.seed,
            "config": {
                "model": asdict(self.model),
                "loss": asdict(self.loss),
                "optim": asdict(self.optim),
            },
            "best_assignment": None if self.best_assignment is None else self.best_assignment.to_dict(),
            "best_iteration": self.best_iteration,
            "iterations_run": self.iterations_run,
            "stop_reason": self.stop_reason,
            "wall_time_seconds": self.wall_time_seconds,
            "final_loss": None if not self.loss_trajectory else self.final_loss,
            "error": self.error,
        }
        if trajectories:
            d["loss_trajectory"] = list(self.loss_trajectory)
            d["conflict_trajectory"] = [list(p) for p in self.conflict_trajectory]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        cfg = d["config"]
        ba = d["best_assignment"]
        return cls(
            seed=d["seed"],
            model=ModelConfig(**cfg["model"]),
            loss=LossConfig(**cfg["loss"]),
            optim=OptimConfig(**cfg["optim"]),
            loss_trajectory=list(d.get("loss_trajectory", [])),
            conflict_trajectory=[tuple(p) for p in d.get("conflict_trajectory", [])],
            best_assignment=None if ba is None else Assignment(tuple(ba["colors"]), ba["k"], ba["conflicts"]),
            best_iteration=d["best_iteration"],
            iterations_run=d["iterations_run"],
            stop_reason=d["stop_reason"],
            wall_time_seconds=d["wall_time_seconds"],
            error=d.get("error"),
        )

    def trajectory_rows(self) -> list[tuple[int, float, int]]:
        """``(iteration, loss, conflicts)`` at each evaluation point.

        The loss is the training loss of the step that produced the
        evaluated parameters (NaN for the initial evaluation).
        """
        rows = []
        for it, c in self.conflict_trajectory:
            loss = self.loss_trajectory[it - 1] if it >= 1 else float("nan")
            rows.append((it, loss, c))
        return rows


def _evaluate(g: Graph, plan, params: ModelParams, cfg: ModelConfig) -> tuple[Assignment, np.ndarray]:
    P = forward(plan, params, cfg, training=False).P.data
    return extract_assignment(g, P), P


def train_once(
    g: Graph,
    k: int,
    model_cfg: ModelConfig | None = None,
    loss_cfg: LossConfig | None = None,
    optim_cfg: OptimConfig | None = None,
    seed: int | None = None,
    stop_at_zero: bool = True,
) -> RunReport:
    """Train one model from scratch and keep the least-conflicting coloring seen.

    Stops at ``max_iters``, at the first zero-conflict evaluation, or when the
    mean loss of the latest ``es_window`` iterations differs from the
    previous window's mean by less than ``es_delta``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    model_cfg = model_cfg or ModelConfig(k=k)
    if seed is None:
        seed = model_cfg.seed
    model_cfg = replace(model_cfg, k=k, seed=seed)
    loss_cfg = loss_cfg or LossConfig()
    optim_cfg = optim_cfg or OptimConfig()

    report = RunReport(seed, model_cfg, loss_cfg, optim_cfg)
    start = time.monotonic()
    plan = dm.AggregationPlan.from_graph(g)
    edges = g.edge_array()
    params = init_params(g, model_cfg)
    drop_rng = np.random.default_rng([seed, 1])
    opt = AdamW(optim_cfg)
    W = optim_cfg.es_window
    losses = report.loss_trajectory

    def record(it: int) -> bool:
        a, _ = _evaluate(g, plan, params, model_cfg)
        report.conflict_trajectory.append((it, a.conflicts))
        if report.best_assignment is None or a.conflicts < report.best_assignment.conflicts:
            report.best_assignment = a
            report.best_iteration = it
        return a.conflicts == 0

    try:
        if record(0) and stop_at_zero:
            report.stop_reason = "zero_conflicts"
            return report
        it = 0
        while it < optim_cfg.max_iters:
            it += 1
            fwd = forward(plan, params, model_cfg, training=True, rng=drop_rng)
            loss = total_loss(g, fwd.P, loss_cfg, edges)
            grads = dm.backward(fwd.tape, loss)
            losses.append(loss.item())
            opt.step(params, grads)
            report.iterations_run = it
            if it % optim_cfg.eval_every == 0 or it == optim_cfg.max_iters:
                if record(it) and stop_at_zero:
                    report.stop_reason = "zero_conflicts"
                    break
            if optim_cfg.early_stopping and it >= 2 * W and it % W == 0:
                recent = np.mean(losses[-W:])
                previous = np.mean(losses[-2 * W : -W])
                if abs(recent - previous) < optim_cfg.es_delta:
                    if report.conflict_trajectory[-1][0] != it:
                        record(it)
                    report.stop_reason = "early_stop"
                    break
        else:
            report.stop_reason = "max_iters"
    except dm.NonFiniteError as exc:
        report.stop_reason = "numeric_error"
        report.error = str(exc)
        log.warning("seed %d aborted: %s", seed, exc)
    finally:
        report.wall_time_seconds = time.monotonic() - start
    return report


class TrainingError(RuntimeError):
    def __init__(self, message: str, reports: list[RunReport]):
        super().__init__(message)
        self.reports = reports


def _run_key(r: RunReport):
    return (r.best_conflicts, r.final_loss, r.seed)


def select_best(reports: list[RunReport]) -> RunReport:
    ok = [r for r in reports if r.best_assignment is not None]
    if not ok:
        raise TrainingError("every restart failed", reports)
    return min(ok, key=_run_key)


def _train_job(args):
    return train_once(*args)


def train_multi(
    g: Graph,
    k: int,
    model_cfg: ModelConfig | None = None,
    loss_cfg: LossConfig | None = None,
    optim_cfg: OptimConfig | None = None,
    restarts: int | None = None,
    seed0: int | None = None,
    workers: int = 1,
    target: int | None = None,
) -> tuple[RunReport, list[RunReport]]:
    """Independent restarts with seeds ``seed0 .. seed0 + restarts - 1``.

    The best run minimizes ``(conflicts, final loss, seed)``. With a
    ``target``, remaining restarts are skipped once some run reaches at most
    that many conflicts (sequential mode only).
    """
    model_cfg = model_cfg or ModelConfig(k=k)
    optim_cfg = optim_cfg or OptimConfig()
    restarts = optim_cfg.restarts if restarts is None else restarts
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    seed0 = model_cfg.seed if seed0 is None else seed0
    jobs = [(g, k, model_cfg, loss_cfg, optim_cfg, seed0 + i) for i in range(restarts)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_train_job, jobs))
    else:
        reports = []
        for job in jobs:
            r = _train_job(job)
            reports.append(r)
            log.info(
                "seed %d: conflicts=%s iters=%d stop=%s %.1fs",
                r.seed, r.best_conflicts, r.iterations_run, r.stop_reason, r.wall_time_seconds,
            )
            if target is not None and r.best_conflicts is not None and r.best_conflicts <= target:
                break
    return select_best(reports), reports


def verify_report(g: Graph, r: RunReport) -> int:
    """Recount the best assignment's conflicts from scratch."""
    if r.best_assignment is None:
        raise ValueError("report has no assignment")
    return count_conflicts(g, r.best_assignment.colors)
