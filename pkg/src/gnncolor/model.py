"""Two-layer coloring GNN with a negative first-layer neighbor aggregation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import diffmath as dm
from .graph import Assignment, Graph, count_conflicts

WEIGHT_NAMES = ("W1_self", "W1_neigh", "W2_self", "W2_neigh")
PARAM_NAMES = ("W1_self", "W1_neigh", "alpha", "W2_self", "W2_neigh", "H0")


@dataclass(frozen=True)
class ModelConfig:
    d0: int = 64
    d1: int = 64
    k: int = 3
    dropout_p: float = 0.5
    activation: str = "leaky_relu"  # identity | relu | leaky_relu
    slope: float = 0.01
    train_embeddings: bool = False
    seed: int = 0

    def __post_init__(self):
        if min(self.d0, self.d1, self.k) < 1:
            raise ValueError("d0, d1 and k must be >= 1")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError("dropout_p must lie in [0, 1)")
        if self.activation not in ("identity", "relu", "leaky_relu"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if not 0.0 <= self.slope <= 1.0:
            raise ValueError("slope must lie in [0, 1]")


@dataclass
class ModelParams:
    W1_self: np.ndarray
    W1_neigh: np.ndarray
    alpha: np.ndarray  # 1x1, used as |alpha|
    W2_self: np.ndarray
    W2_neigh: np.ndarray
    H0: np.ndarray

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "ModelParams":
        return ModelParams(**{k: v.copy() for k, v in self.arrays().items()})


def init_params(g: Graph, cfg: ModelConfig) -> ModelParams:
    """Random initial parameters.

    Layer-1 weights and the input embeddings are Uniform(0, 1); layer-2
    weights are Uniform(-s, s) with ``s = sqrt(6 / (d1 + k))``; alpha starts
    at 0.5. Draw order is fixed: H0, W1_self, W1_neigh, W2_self, W2_neigh.
    """
    rng = np.random.default_rng(cfg.seed)
    H0 = rng.random((g.n, cfg.d0))
    W1_self = rng.random((cfg.d0, cfg.d1))
    W1_neigh = rng.random((cfg.d0, cfg.d1))
    s = np.sqrt(6.0 / (cfg.d1 + cfg.k))
    W2_self = rng.uniform(-s, s, (cfg.d1, cfg.k))
    W2_neigh = rng.uniform(-s, s, (cfg.d1, cfg.k))
    return ModelParams(W1_self, W1_neigh, np.array([[0.5]]), W2_self, W2_neigh, H0)


def _activate(x: dm.Tensor, cfg: ModelConfig) -> dm.Tensor:
    if cfg.activation == "identity":
        return x
    if cfg.activation == "relu":
        return dm.leaky_relu(x, 0.0)
    return dm.leaky_relu(x, cfg.slope)


@dataclass
class ForwardResult:
    tape: dm.Tape
    leaves: dict[str, dm.Tensor]
    H1: dm.Tensor
    H2: dm.Tensor
    P: dm.Tensor


def forward(
    plan: dm.AggregationPlan,
    params: ModelParams,
    cfg: ModelConfig,
    training: bool,
    rng: np.random.Generator | None = None,
    tape: dm.Tape | None = None,
) -> ForwardResult:
    """Build the forward computation on a fresh tape.

    Layer 1 subtracts the ``|alpha|``-scaled neighbor mean; dropout sits
    between the layers; layer 2 is a plain mean aggregator feeding softmax.
    """
    if params.H0.shape[0] != plan.n:
        raise ValueError(f"H0 has {params.H0.shape[0]} rows, graph has {plan.n} nodes")
    if params.W2_self.shape[1] != cfg.k:
        raise ValueError("second-layer width must equal k")
    tape = tape or dm.Tape()
    leaves = {
        name: tape.param(arr, name=name) for name, arr in params.arrays().items() if name != "H0"
    }
    if cfg.train_embeddings:
        leaves["H0"] = tape.param(params.H0, name="H0")
    else:
        leaves["H0"] = tape.constant(params.H0, name="H0")
    H0 = leaves["H0"]

    own = dm.matmul(H0, leaves["W1_self"])
    neigh = dm.matmul(dm.neighbor_mean(plan, H0), leaves["W1_neigh"])
    neigh = dm.mul(neigh, dm.absolute(leaves["alpha"]))
    H1 = _activate(dm.sub(own, neigh), cfg)
    if training and cfg.dropout_p > 0:
        if rng is None:
            raise ValueError("training-mode dropout needs a generator")
        H1_in = dm.dropout(H1, cfg.dropout_p, rng, training=True)
    else:
        H1_in = H1
    H2 = dm.add(
        dm.matmul(H1_in, leaves["W2_self"]),
        dm.matmul(dm.neighbor_mean(plan, H1_in), leaves["W2_neigh"]),
    )
    P = dm.row_softmax(H2)
    return ForwardResult(tape, leaves, H1, H2, P)


def extract_assignment(g: Graph, P: np.ndarray) -> Assignment:
    """Most probable color per node; ``argmax`` breaks ties toward the lowest index."""
    P = np.asarray(P)
    colors = tuple(int(c) for c in np.argmax(P, axis=1))
    return Assignment(colors, P.shape[1], count_conflicts(g, colors))


def save_checkpoint(params: ModelParams, cfg: ModelConfig, path) -> None:
    """JSON checkpoint: config header plus row-major named tensors."""
    blob = {
        "format": "gnncolor-checkpoint/1",
        "config": asdict(cfg),
        "tensors": {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in params.arrays().items()
        },
    }
    with open(path, "w") as fh:
        json.dump(blob, fh)


def load_checkpoint(path) -> tuple[ModelParams, ModelConfig]:
    with open(path) as fh:
        blob = json.load(fh)
    cfg = ModelConfig(**blob["config"])
    arrays = {
        name: np.asarray(t["data"], dtype=np.float64).reshape(t["shape"])
        for name, t in blob["tensors"].items()
    }
    return ModelParams(**arrays), cfg
