"""
Matrix CSV files

One row per line, comma separated. A `# symmetric` line marks symmetric
data, given either as full rows or as upper-triangle rows of decreasing
length. Other lines starting with '#' and blank lines are ignored.
"""

import csv
import logging
from typing import Iterable, List, Sequence

import numpy as np

from ..models import DataMatrix

logger = logging.getLogger(__name__)

SYMMETRIC_DIRECTIVE = "# symmetric"


def _parse_rows(lines: Iterable[str]):
    symmetric = False
    rows: List[List[float]] = []
    for number, row in enumerate(csv.reader(lines), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        first = row[0].strip()
        if first.startswith("#"):
            if ",".join(row).strip().lower() == SYMMETRIC_DIRECTIVE:
                symmetric = True
            continue
        try:
            rows.append([float(cell) for cell in row if cell.strip()])
        except ValueError:
            raise ValueError(f"Line {number}: non-numeric entry in {row}")
    if not rows:
        raise ValueError("Matrix file has no rows")
    return rows, symmetric


def parse_matrix(text: str) -> DataMatrix:
    """DataMatrix from CSV text"""
    rows, symmetric = _parse_rows(text.splitlines())
    widths = [len(row) for row in rows]
    if symmetric and widths == list(range(widths[0], 0, -1)):
        return DataMatrix(np.concatenate([np.asarray(row) for row in rows]), True)
    if len(set(widths)) != 1:
        raise ValueError(f"Ragged matrix rows: {widths}")
    return DataMatrix(np.asarray(rows), symmetric)


def read_matrix(path: str) -> DataMatrix:
    with open(path, "r", newline="") as f:
        matrix = parse_matrix(f.read())
    logger.info("Read %d x %d%s matrix from %s", matrix.m, matrix.n,
                " symmetric" if matrix.symmetric else "", path)
    return matrix


def format_value(value: float) -> str:
    return format(float(value), ".17g")


def format_matrix(matrix: DataMatrix, triangle: bool = False) -> str:
    """CSV text; symmetric data gets the directive and full or triangle rows"""
    lines = []
    full = matrix.matrix
    if matrix.symmetric:
        lines.append(SYMMETRIC_DIRECTIVE)
    for i, row in enumerate(full):
        cells = row[i:] if matrix.symmetric and triangle else row
        lines.append(",".join(format_value(v) for v in cells))
    return "\n".join(lines) + "\n"


def write_matrix(path: str, matrix: DataMatrix, triangle: bool = False) -> None:
    with open(path, "w", newline="") as f:
        f.write(format_matrix(matrix, triangle))


def write_rows(stream, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Plain CSV table with 17-digit floats"""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) if isinstance(v, float) else v for v in row])


__all__ = ["parse_matrix", "read_matrix", "format_matrix", "write_matrix", "write_rows"]
