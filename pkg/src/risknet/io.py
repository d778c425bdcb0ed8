"""Plain-text readers and writers: matrices, vectors, edge lists, JSON."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .stochmat import SharingMatrix


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _numeric_rows(path):
    """Non-empty CSV records as float lists; a non-numeric first record is a header and skipped."""
    with open(path, newline="") as fh:
        for k, rec in enumerate(csv.reader(fh)):
            cells = [c.strip() for c in rec if c.strip()]
            if not cells:
                continue
            try:
                yield [float(c) for c in cells]
            except ValueError:
                if k == 0:
                    continue
                raise


def matrix_header(n: int) -> list[str]:
    return [f"c{j}" for j in range(n)]


def write_matrix_csv(path, m) -> None:
    write_table(path, matrix_header(np.asarray(m).shape[1]), np.asarray(m, dtype=float).tolist())


def read_matrix_csv(path) -> SharingMatrix:
    return SharingMatrix(np.array(list(_numeric_rows(path)), dtype=float))


def read_vector_csv(path) -> np.ndarray:
    """Read numbers from a one-column (or one-row) CSV; a non-numeric header row is skipped."""
    return np.array([v for row in _numeric_rows(path) for v in row], dtype=float)


def write_edge_list(path, graph) -> None:
    write_table(path, ["i", "j"], graph.edges())


def read_edge_list(path) -> list[tuple[int, int]]:
    return [(int(r[0]), int(r[1])) for r in _numeric_rows(path)]


def write_table(path, header, rows) -> None:
    """Tidy CSV with a header row; floats written with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
