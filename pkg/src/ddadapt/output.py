"""
CSV artifacts.

Numbers are written with 17 significant digits and every file uses "\n"
line endings, so re-running a command with the same configuration gives
byte-identical output.
"""

from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ddadapt.constants import CSV_FORMAT
from ddadapt.models import AdaptationMap, InterfaceRecord, PdfEstimate, SparseGrid
from ddadapt.models import StageCost, StructuredGrid

PathLike = Union[str, Path]


def format_cell(value: Any) -> str:
    """Render one CSV cell: integers as-is, floats with full precision."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return CSV_FORMAT % float(value)
    return str(value)


def write_rows(
    path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]
) -> Path:
    """Write a header and rows of mixed cells."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines.extend(",".join(format_cell(cell) for cell in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
    return path


def write_columns(
    path: PathLike, header: Sequence[str], columns: Sequence[np.ndarray]
) -> Path:
    """Write equally long numeric columns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    fmt = [
        "%d" if np.issubdtype(np.asarray(c).dtype, np.integer) else CSV_FORMAT
        for c in columns
    ]
    np.savetxt(
        path,
        table,
        fmt=fmt,
        delimiter=",",
        header=",".join(header),
        comments="",
        newline="\n",
    )
    return path


def read_columns(path: PathLike) -> Dict[str, np.ndarray]:
    """Read a numeric CSV written by this module into {column: values}."""
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().strip().split(",")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if table.size == 0:
        return {name: np.empty(0) for name in header}
    return {name: table[:, i] for i, name in enumerate(header)}


def read_rows(path: PathLike) -> List[Dict[str, str]]:
    """Read any CSV written by this module as a list of {column: text}."""
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:] if line]


def write_fields(
    path: PathLike,
    grid: StructuredGrid,
    mean: np.ndarray,
    std: np.ndarray,
    subdomain: Optional[np.ndarray] = None,
) -> Path:
    """x1,x2,mean,std[,subdomain] per grid node."""
    header = ["x1", "x2", "mean", "std"]
    columns = [grid.nodes[:, 0], grid.nodes[:, 1], mean, std]
    if subdomain is not None:
        header.append("subdomain")
        columns.append(np.asarray(subdomain, dtype=int))
    return write_columns(path, header, columns)


def write_spectrum(path: PathLike, values: np.ndarray, name: str = "mu") -> Path:
    """index,<name> with a 1-based index."""
    return write_columns(path, ["index", name], [np.arange(1, len(values) + 1), values])


def write_isometry(path: PathLike, amap: AdaptationMap) -> Path:
    """i,j,a_ij for every entry of A, 1-based."""
    d = amap.d
    ii, jj = np.meshgrid(np.arange(1, d + 1), np.arange(1, d + 1), indexing="ij")
    return write_columns(
        path, ["i", "j", "a_ij"], [ii.ravel(), jj.ravel(), amap.A.ravel()]
    )


def write_pdf(path: PathLike, estimate: PdfEstimate) -> Path:
    """value,density; a degenerate estimate is one row with density inf."""
    header = ["value", "density"]
    if estimate.degenerate:
        return write_rows(path, header, [(float(estimate.support[0]), "inf")])
    return write_columns(path, header, [estimate.support, estimate.density])


def write_samples(path: PathLike, samples: np.ndarray) -> Path:
    return write_columns(path, ["sample"], [samples])


def write_nodes(path: PathLike, sg: SparseGrid) -> Path:
    """q,w,z_1..z_d."""
    header = ["q", "w"] + [f"z_{i}" for i in range(1, sg.d + 1)]
    columns = [np.arange(sg.size), sg.weights] + [sg.nodes[:, i] for i in range(sg.d)]
    return write_columns(path, header, columns)


def write_interface(path: PathLike, records: Sequence[InterfaceRecord]) -> Path:
    header = [
        "node",
        "x1",
        "x2",
        "subdomain_a",
        "subdomain_b",
        "mean_mismatch",
        "std_mismatch",
    ]
    rows = ([rec.to_dict()[key] for key in header] for rec in records)
    return write_rows(path, header, rows)


def write_manifest(path: PathLike, costs: Sequence[StageCost]) -> Path:
    """stage,solves,seconds with a closing total row."""
    rows: List[Tuple[Any, ...]] = [(c.stage, c.solves, float(c.seconds)) for c in costs]
    seconds = float(sum(c.seconds for c in costs))
    rows.append(("total", sum(c.solves for c in costs), seconds))
    return write_rows(path, ["stage", "solves", "seconds"], rows)


def read_manifest(path: PathLike) -> Dict[str, int]:
    """{stage: solves} including the total row."""
    return {row["stage"]: int(row["solves"]) for row in read_rows(path)}


def write_metrics(path: PathLike, rows: Iterable[Tuple[str, str, float]]) -> Path:
    """metric,region,value."""
    return write_rows(path, ["metric", "region", "value"], rows)


def write_modes(path: PathLike, grid: StructuredGrid, modes: np.ndarray) -> Path:
    """x1,x2,g_1..g_d with the KL eigenfunctions on the grid nodes."""
    d = modes.shape[1]
    header = ["x1", "x2"] + [f"g_{i}" for i in range(1, d + 1)]
    columns = [grid.nodes[:, 0], grid.nodes[:, 1]] + [modes[:, i] for i in range(d)]
    return write_columns(path, header, columns)


def write_partition(path: PathLike, grid: StructuredGrid, labels: np.ndarray) -> Path:
    """x1,x2,subdomain."""
    return write_columns(
        path,
        ["x1", "x2", "subdomain"],
        [grid.nodes[:, 0], grid.nodes[:, 1], np.asarray(labels, dtype=int)],
    )


def write_realization(path: PathLike, grid: StructuredGrid, u: np.ndarray) -> Path:
    """x1,x2,u for one deterministic solve."""
    columns = [grid.nodes[:, 0], grid.nodes[:, 1], u]
    return write_columns(path, ["x1", "x2", "u"], columns)
