"""Bundled benchmark instances and the published reference numbers for them."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .graph import Graph, Timetable, format_dimacs, read_dimacs, read_timetable
from .generators import by_name


@dataclass(frozen=True)
class BenchRow:
    name: str
    nodes: int
    edges: int
    k: int
    # best conflicts reported per method, in published column order
    tabucol: int
    hybridea: int
    gdn: int
    pi_gcn: int
    pi_sage: int
    gnn_1n: int


COLOR_TABLE: tuple[BenchRow, ...] = (
    BenchRow("myciel5", 47, 236, 6, 0, 0, 0, 0, 0, 0),
    BenchRow("myciel6", 95, 755, 7, 0, 0, 0, 0, 0, 0),
    BenchRow("queen5-5", 25, 160, 7, 0, 0, 0, 0, 0, 0),
    BenchRow("queen6-6", 36, 290, 7, 0, 0, 4, 1, 0, 0),
    BenchRow("queen7-7", 49, 476, 7, 10, 9, 15, 8, 0, 0),
    BenchRow("queen8-8", 64, 728, 9, 8, 5, 7, 6, 1, 1),
    BenchRow("queen9-9", 81, 1056, 10, 5, 6, 13, 13, 1, 1),
    BenchRow("queen8-12", 96, 1368, 12, 10, 3, 7, 10, 0, 0),
    BenchRow("queen11-11", 121, 1980, 11, 33, 22, 33, 37, 17, 13),
    BenchRow("queen13-13", 169, 3328, 13, 42, 37, 40, 61, 26, 15),
)

TABLE_BY_NAME = {row.name: row for row in COLOR_TABLE}


def file_name(name: str) -> str:
    """``queen5-5`` -> ``queen5_5.col`` (the DIMACS distribution's naming)."""
    return name.replace("-", "_") + ".col"


def data_dir() -> Path:
    return Path(str(resources.files("gnncolor") / "data"))


def bundled_graph_path(name: str) -> Path:
    return data_dir() / file_name(name)


def load_graph(name: str) -> Graph:
    return read_dimacs(bundled_graph_path(name))


def sample_timetable_path() -> Path:
    return data_dir() / "taxi_sample.csv"


def sample_timetable() -> Timetable:
    return read_timetable(sample_timetable_path())


def write_bundled_graphs(target: Path | None = None) -> list[Path]:
    """Regenerate the ``.col`` files for every table row from their constructions."""
    target = Path(target) if target else data_dir()
    target.mkdir(parents=True, exist_ok=True)
    out = []
    for row in COLOR_TABLE:
        g = by_name(row.name)
        path = target / file_name(row.name)
        path.write_text(format_dimacs(g, comment=f"{row.name}: generated by gnncolor.generators"))
        out.append(path)
    return out
