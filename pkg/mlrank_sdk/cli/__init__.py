"""
Command-line interface for mlrank
"""

from .main import build_parser, main
from .matrix_io import parse_matrix, read_matrix, write_matrix
from .models import RunConfig, SolveReportModel

__all__ = ["build_parser", "main", "parse_matrix", "read_matrix", "write_matrix", "RunConfig", "SolveReportModel"]
