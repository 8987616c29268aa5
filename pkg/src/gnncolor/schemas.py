"""Versioned JSON schemas for every document the CLI writes.

Each document carries a ``"schema"`` key naming its schema id, e.g.
``"gnncolor/solve/1"``; :func:`validate` checks a document against it.
"""

from __future__ import annotations

import jsonschema

SCHEMA_VERSION = 1

_assignment = {
    "type": "object",
    "required": ["colors", "k", "conflicts"],
    "properties": {
        "colors": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "k": {"type": "integer", "minimum": 0},
        "conflicts": {"type": "integer", "minimum": 0},
    },
}

_run = {
    "type": "object",
    "required": [
        "seed",
        "config",
        "best_assignment",
        "iterations_run",
        "stop_reason",
        "wall_time_seconds",
    ],
    "properties": {
        "seed": {"type": "integer"},
        "config": {
            "type": "object",
            "required": ["model", "loss", "optim"],
            "properties": {
                "model": {"type": "object"},
                "loss": {"type": "object"},
                "optim": {"type": "object"},
            },
        },
        "best_assignment": {"oneOf": [{"type": "null"}, _assignment]},
        "best_iteration": {"type": "integer"},
        "iterations_run": {"type": "integer", "minimum": 0},
        "stop_reason": {"enum": ["max_iters", "early_stop", "zero_conflicts", "numeric_error"]},
        "wall_time_seconds": {"type": "number", "minimum": 0},
        "final_loss": {"type": ["number", "null"]},
        "error": {"type": ["string", "null"]},
        "loss_trajectory": {"type": "array", "items": {"type": "number"}},
        "conflict_trajectory": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        },
    },
}

_graph_info = {
    "type": "object",
    "required": ["name", "nodes", "edges"],
    "properties": {
        "name": {"type": "string"},
        "nodes": {"type": "integer", "minimum": 0},
        "edges": {"type": "integer", "minimum": 0},
        "edge_count_mismatch": {"type": "boolean"},
    },
}


def _doc(schema_id: str, required: list[str], properties: dict) -> dict:
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "$id": schema_id,
        "type": "object",
        "required": ["schema", *required],
        "properties": {"schema": {"const": schema_id}, **properties},
    }


SOLVE = _doc(
    f"gnncolor/solve/{SCHEMA_VERSION}",
    ["graph", "k", "best", "runs", "conflicts"],
    {
        "graph": _graph_info,
        "k": {"type": "integer", "minimum": 1},
        "conflicts": {"type": "integer", "minimum": 0},
        "colors_used": {"type": "integer", "minimum": 0},
        "best": _run,
        "runs": {"type": "array", "items": _run},
    },
)

_bench_row = {
    "type": "object",
    "required": ["graph", "k", "status"],
    "properties": {
        "graph": {"type": "string"},
        "path": {"type": "string"},
        "k": {"type": "integer", "minimum": 1},
        "status": {"enum": ["ok", "error"]},
        "error": {"type": ["string", "null"]},
        "nodes": {"type": "integer"},
        "edges": {"type": "integer"},
        "conflicts": {"type": "integer", "minimum": 0},
        "colors_used": {"type": "integer"},
        "error_rate": {"type": "number"},
        "iterations": {"type": "integer"},
        "best_seed": {"type": "integer"},
        "restarts_run": {"type": "integer"},
        "best_run_seconds": {"type": "number"},
        "total_seconds": {"type": "number"},
        "seconds_per_1e5_iters": {"type": "number"},
        "reference": {"type": ["integer", "null"]},
        "runs": {"type": "array", "items": _run},
    },
}

BENCH = _doc(
    f"gnncolor/bench/{SCHEMA_VERSION}",
    ["rows"],
    {"rows": {"type": "array", "items": _bench_row}, "restarts": {"type": "integer"}},
)

ABLATE = _doc(
    f"gnncolor/ablate/{SCHEMA_VERSION}",
    ["graph", "k", "lambda", "arms"],
    {
        "graph": _graph_info,
        "k": {"type": "integer"},
        "lambda": {"type": "number"},
        "arms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "csv", "best_conflicts", "final_conflicts", "conflict_variation"],
                "properties": {
                    "name": {"type": "string"},
                    "csv": {"type": "string"},
                    "best_conflicts": {"type": "integer"},
                    "final_conflicts": {"type": "integer"},
                    "conflict_variation": {"type": "integer"},
                    "upward_jumps": {"type": "integer"},
                },
            },
        },
    },
)

TAXI = _doc(
    f"gnncolor/taxi/{SCHEMA_VERSION}",
    ["k", "conflicts", "groups", "satisfiable"],
    {
        "k": {"type": "integer", "minimum": 1},
        "conflicts": {"type": "integer", "minimum": 0},
        "satisfiable": {"type": "boolean"},
        "groups": {"type": "array", "items": {"type": "array", "items": {"type": "string"}}},
        "conflicting_pairs": {"type": "array", "items": {"type": "array", "items": {"type": "string"}}},
        "dsatur_colors": {"type": "integer"},
        "best": _run,
    },
)

GRADCHECK = _doc(
    f"gnncolor/gradcheck/{SCHEMA_VERSION}",
    ["seed", "checks", "passed"],
    {
        "seed": {"type": "integer"},
        "passed": {"type": "boolean"},
        "notices": {"type": "array", "items": {"type": "string"}},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "max_rel_error", "max_abs_error", "passed"],
                "properties": {
                    "name": {"type": "string"},
                    "max_rel_error": {"type": "number"},
                    "max_abs_error": {"type": "number"},
                    "passed": {"type": "boolean"},
                },
            },
        },
    },
)

BASELINE = _doc(
    f"gnncolor/baseline/{SCHEMA_VERSION}",
    ["method", "graph", "assignment"],
    {
        "method": {"enum": ["dsatur", "tabucol"]},
        "graph": _graph_info,
        "assignment": _assignment,
        "moves": {"type": "integer"},
        "initial_conflicts": {"type": "integer"},
        "wall_time_seconds": {"type": "number"},
    },
)

SCHEMAS = {s["$id"]: s for s in (SOLVE, BENCH, ABLATE, TAXI, GRADCHECK, BASELINE)}


def validate(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` unless ``doc`` matches its declared schema."""
    try:
        schema = SCHEMAS[doc["schema"]]
    except KeyError:
        raise jsonschema.ValidationError(f"unknown schema {doc.get('schema')!r}") from None
    jsonschema.validate(doc, schema)
