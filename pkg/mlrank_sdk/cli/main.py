#!/usr/bin/env python3
"""
Command line for mlrank

Preprocess a model once (mldeg), then solve, pair, certify or compare
with EM for any data matrix of that shape.
"""

import argparse
import dataclasses
import io
import json
import logging
import sys
from typing import Dict, List, Optional

import numpy as np

from ..bounds import bound_report, known_ml_degree
from ..classify import diana_sweep
from ..config import SolverSettings, configure_logging
from ..em import compare_em_vs_global, multistart_em
from ..exceptions import (
    ArchiveMismatch,
    CorruptArchive,
    InvalidModel,
    NoBijection,
    PathFailure,
    SchemaMismatch,
    SingularMatrix,
    TraceTestFailed,
)
from ..models import DataMatrix, RankModel, SolutionArchive
from ..monodromy import MonodromyOptions, load_archive, save_archive
from ..solver import CriticalPointSolver, SolveReport
from ..tracker import TrackerOptions
from ..utils.checksum_utils import array_checksum, canonical_json
from .matrix_io import format_value, read_matrix, write_rows
from .models import (
    BoundsReportModel,
    CertifyReportModel,
    DualityReportModel,
    EmMaximumReport,
    EmReportModel,
    MLDegreeReport,
    PointReport,
    RunConfig,
    SolveReportModel,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INCOMPLETE = 2
EXIT_VERIFICATION = 3
EXIT_IO = 4

EPILOG = """
Examples:
  # ML degree of 3 x 3 matrices of rank 2 (prints 10)
  mlrank mldeg -m 3 -n 3 -r 2 --archive m3n3r2.json

  # Symmetric 4 x 4 matrices of rank 2 (prints 37)
  mlrank mldeg --symmetric -n 4 -r 2

  # All critical points of a data matrix using a stored archive
  mlrank solve data.csv -r 2 --archive m3n3r2.json

  # Root-count bounds
  mlrank bounds -m 4 -n 4 -r 3

  # EM with 2000 starts
  mlrank em data.csv -r 2 --starts 2000 --seed 1

  # DiaNA sweep written as CSV
  mlrank diana --grid 1.1:3.9:0.1 --archive m4n4r2.json --output diana.csv
"""

_TRACKER_FIELDS = {f.name for f in dataclasses.fields(TrackerOptions)}
_MONODROMY_FIELDS = {f.name for f in dataclasses.fields(MonodromyOptions)} - {"tracker", "threads", "trace_offsets"}
_EM_FIELDS = {"em_tolerance", "em_max_iter"}


def _finite(value) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return value if np.isfinite(value) else None


def _parse_tolerance(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"Expected NAME=VALUE, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"Tolerance {key!r} needs a number, got {value!r}")


def _coerce(options, overrides: Dict[str, float]):
    """Copy of a dataclass with the overrides that name its fields"""
    types = {f.name: f.type for f in dataclasses.fields(options)}
    values = {}
    for key, value in overrides.items():
        if key in types:
            values[key] = int(value) if types[key] in (int, "int") else value
    return dataclasses.replace(options, **values) if values else options


def tracker_options(config: RunConfig) -> TrackerOptions:
    return _coerce(TrackerOptions(), config.tolerances)


def monodromy_options(config: RunConfig) -> MonodromyOptions:
    base = MonodromyOptions.deep() if config.deep else MonodromyOptions()
    options = _coerce(base, config.tolerances)
    options.tracker = tracker_options(config)
    options.threads = config.threads
    return options


def _check_tolerances(config: RunConfig) -> None:
    unknown = set(config.tolerances) - _TRACKER_FIELDS - _MONODROMY_FIELDS - _EM_FIELDS
    if unknown:
        raise ValueError(f"Unknown tolerance names: {', '.join(sorted(unknown))}")


# ----------------------------------------------------------------------
# parser


def _add_common(parser: argparse.ArgumentParser, settings: SolverSettings) -> None:
    parser.add_argument(
        "--seed",
        type=int,
        default=settings.seed,
        help=f"Master seed (default: {settings.seed})"
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=settings.threads,
        help=f"Worker threads; 1 runs serially (default: {settings.threads})"
    )
    parser.add_argument(
        "--format",
        dest="output_format",
        default="table",
        choices=["json", "table", "csv"],
        help="Report format (default: table)"
    )
    parser.add_argument(
        "--output",
        default=None,
        help="Write the report to this file instead of stdout"
    )
    parser.add_argument(
        "--tol",
        dest="tolerances",
        action="append",
        type=_parse_tolerance,
        default=[],
        metavar="NAME=VALUE",
        help="Override a tracker, monodromy or EM setting (repeatable)"
    )
    parser.add_argument(
        "--store",
        default=settings.store_type,
        choices=["json", "sqlite"],
        help=f"Archive store used when --archive is not given (default: {settings.store_type})"
    )
    parser.add_argument(
        "--log-level",
        default=settings.log_level.lower(),
        choices=["debug", "info", "warning", "error"],
        help=f"Log level (default: {settings.log_level.lower()})"
    )


def _add_model(parser: argparse.ArgumentParser, rank_only: bool = False) -> None:
    if not rank_only:
        parser.add_argument("-m", type=int, default=None, help="Number of rows (taken from -n with --symmetric)")
        parser.add_argument("-n", type=int, required=True, help="Number of columns")
    parser.add_argument("-r", type=int, required=True, help="Rank bound")


def build_parser(settings: Optional[SolverSettings] = None) -> argparse.ArgumentParser:
    settings = settings or SolverSettings.from_env()
    parser = argparse.ArgumentParser(
        prog="mlrank",
        description="Maximum likelihood critical points of rank-constrained probability matrices",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=EPILOG,
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    mldeg = sub.add_parser("mldeg", help="Solve a random instance by monodromy and print the ML degree")
    _add_model(mldeg)
    mldeg.add_argument("--symmetric", action="store_true", help="Symmetric model with doubled diagonal")
    mldeg.add_argument("--deep", action="store_true", help="Use the large loop budgets")
    mldeg.add_argument("--archive", default=None, help="Write the archive to this JSON file")
    _add_common(mldeg, settings)

    solve = sub.add_parser("solve", help="Classify every critical point of a data matrix")
    solve.add_argument("matrix", help="Matrix CSV")
    _add_model(solve, rank_only=True)
    solve.add_argument("--archive", default=None, help="Archive JSON (store lookup when omitted)")
    _add_common(solve, settings)

    duality = sub.add_parser("duality", help="Pair rank-r points with the dual rank")
    duality.add_argument("matrix", help="Matrix CSV")
    _add_model(duality, rank_only=True)
    duality.add_argument("--archive", default=None, help="Archive JSON for rank r")
    duality.add_argument("--dual-archive", default=None, help="Archive JSON for the dual rank")
    _add_common(duality, settings)

    bounds = sub.add_parser("bounds", help="Bezout and four-homogeneous root counts")
    _add_model(bounds)
    _add_common(bounds, settings)

    em = sub.add_parser("em", help="Multi-start EM on the mixture model")
    em.add_argument("matrix", help="Matrix CSV")
    _add_model(em, rank_only=True)
    em.add_argument(
        "--starts",
        type=int,
        default=settings.em_starts,
        help=f"Number of random starts (default: {settings.em_starts})"
    )
    em.add_argument("--archive", default=None, help="Compare EM maxima with the critical points from this archive")
    _add_common(em, settings)

    diana = sub.add_parser("diana", help="Sweep the DiaNA family and write a CSV")
    diana.add_argument("--grid", default="1.1:3.9:0.1", help="start:stop:step for a (default: 1.1:3.9:0.1)")
    diana.add_argument("--archive", default=None, help="Archive JSON for (4, 4, 2)")
    _add_common(diana, settings)

    certify = sub.add_parser("certify", help="Newton-contraction certificate for the transported points")
    certify.add_argument("matrix", help="Matrix CSV")
    _add_model(certify, rank_only=True)
    certify.add_argument("--archive", default=None, help="Archive JSON (store lookup when omitted)")
    _add_common(certify, settings)

    return parser


def make_config(args: argparse.Namespace, U: Optional[DataMatrix] = None) -> RunConfig:
    symmetric = bool(getattr(args, "symmetric", False))
    m, n = getattr(args, "m", None), getattr(args, "n", None)
    if U is not None:
        m, n, symmetric = U.m, U.n, U.symmetric
    elif symmetric and n is not None:
        m = n
    config = RunConfig(
        subcommand=args.subcommand,
        m=m,
        n=n,
        r=getattr(args, "r", None),
        symmetric=symmetric,
        matrix_path=getattr(args, "matrix", None),
        archive_path=getattr(args, "archive", None),
        dual_archive_path=getattr(args, "dual_archive", None),
        output_path=args.output,
        seed=args.seed,
        tolerances=dict(args.tolerances),
        output_format=args.output_format,
        threads=max(1, args.threads),
        log_level=args.log_level.upper(),
        deep=bool(getattr(args, "deep", False)),
        n_starts=getattr(args, "starts", None),
        grid=getattr(args, "grid", None),
    )
    _check_tolerances(config)
    return config


def make_solver(args: argparse.Namespace, config: RunConfig) -> CriticalPointSolver:
    settings = SolverSettings.from_env()
    settings.threads = config.threads
    settings.seed = config.seed
    return CriticalPointSolver(store_type=args.store, settings=settings)


# ----------------------------------------------------------------------
# output


def _emit(config: RunConfig, text: str) -> None:
    if config.output_path:
        with open(config.output_path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _json_text(report) -> str:
    document = report.model_dump(mode="json")
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def _table(header: List[str], rows: List[List[str]]) -> str:
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(cell.ljust(w) for cell, w in zip(row, widths)) for row in rows)
    return "\n".join(lines) + "\n"


def _csv_text(header: List[str], rows: List[list]) -> str:
    buffer = io.StringIO()
    write_rows(buffer, header, rows)
    return buffer.getvalue()


def _render(config: RunConfig, report, header: List[str], rows: List[list], footer: str = "") -> None:
    if config.output_format == "json":
        _emit(config, _json_text(report))
    elif config.output_format == "csv":
        _emit(config, _csv_text(header, rows))
    else:
        text_rows = [[format_value(v) if isinstance(v, float) else str(v) for v in row] for row in rows]
        _emit(config, _table(header, text_rows) + footer)


def _load(path: Optional[str]) -> Optional[SolutionArchive]:
    return load_archive(path) if path else None


def _point_reports(report: SolveReport) -> List[PointReport]:
    reports = []
    for point in report.points:
        data = point.to_dict()
        data["residual"] = _finite(data["residual"])
        reports.append(PointReport(**data))
    return reports


# ----------------------------------------------------------------------
# subcommands


def cmd_mldeg(args: argparse.Namespace) -> int:
    config = make_config(args)
    model = config.model()
    if not model.symmetric and model.m > model.n:
        model = model.transposed()

    if model.r == model.m:
        # the rank bound is vacuous
        report = MLDegreeReport(model=model.to_dict(), config=config, ml_degree=1, trace_test_passed=True,
                                known_ml_degree=1)
        _render(config, report, ["ml_degree"], [[1]])
        return EXIT_OK

    solver = make_solver(args, config)
    archive = solver.preprocess(model, config.seed, monodromy_options(config), save=not config.archive_path)
    if config.archive_path:
        save_archive(archive, config.archive_path)
    report = MLDegreeReport(
        model=model.to_dict(),
        config=config,
        ml_degree=archive.ml_degree,
        trace_test_passed=archive.complete,
        trace_residual=_finite(archive.trace_test.residual),
        archive_checksum=archive.checksum,
        known_ml_degree=known_ml_degree(model.m, model.n, model.r, model.symmetric),
    )
    status = "passed" if archive.complete else "FAILED"
    _render(config, report, ["ml_degree", "trace_test"], [[archive.ml_degree, status]])
    if not archive.complete:
        print(f"Trace test failed for {model.label()}; {archive.ml_degree} solutions found", file=sys.stderr)
        return EXIT_INCOMPLETE
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    U = read_matrix(args.matrix)
    config = make_config(args, U)
    solver = make_solver(args, config)
    result = solver.solve(U, config.r, _load(config.archive_path), config.seed, tracker_options(config))
    report = SolveReportModel(
        model=result.model.to_dict(),
        config=config,
        input_checksum=array_checksum(U.values),
        archive_checksum=result.archive_checksum,
        points=_point_reports(result),
        summary=result.summary,
    )
    rows = [[p.index, p.log_likelihood, p.extremum.value, p.numerical_rank] for p in result.positive]
    summary = result.summary
    footer = (f"\ntotal {summary['total']}  real {summary['real']}  positive {summary['positive']}  "
              f"max {summary['max']}  min {summary['min']}  saddle {summary['saddle']}\n")
    if result.failed_paths:
        footer += f"{result.failed_paths} paths failed\n"
    _render(config, report, ["index", "logL", "extremum", "rank"], rows, footer)
    return EXIT_OK


def cmd_duality(args: argparse.Namespace) -> int:
    U = read_matrix(args.matrix)
    config = make_config(args, U)
    solver = make_solver(args, config)
    model = RankModel(min(U.m, U.n), max(U.m, U.n), config.r, U.symmetric)
    pairing = solver.duality(U, config.r, _load(config.archive_path), _load(config.dual_archive_path),
                             config.seed, tracker=tracker_options(config))
    report = DualityReportModel(
        model=model.to_dict(),
        config=config,
        input_checksum=array_checksum(U.values),
        dual_rank=model.dual_rank,
        pairs=[list(pair) for pair in pairing.pairs],
        max_residual=pairing.max_residual,
        tolerance=pairing.tolerance,
        verified=pairing.verified,
    )
    footer = f"\n{len(pairing.pairs)} pairs, max residual {pairing.max_residual:.3e}\n"
    _render(config, report, ["rank_r", "dual_rank"], [list(pair) for pair in pairing.pairs], footer)
    return EXIT_OK if pairing.verified else EXIT_VERIFICATION


def cmd_bounds(args: argparse.Namespace) -> int:
    config = make_config(args)
    model = config.model()
    bounds = bound_report(model)
    report = BoundsReportModel(model=model.to_dict(), config=config, bezout=bounds.bezout,
                               multihomogeneous=bounds.multihomogeneous, known_ml_degree=bounds.known_ml_degree)
    known = "" if bounds.known_ml_degree is None else bounds.known_ml_degree
    _render(config, report, ["bezout", "multihomogeneous", "ml_degree"],
            [[bounds.bezout, bounds.multihomogeneous, known]])
    return EXIT_OK


def cmd_em(args: argparse.Namespace) -> int:
    U = read_matrix(args.matrix)
    config = make_config(args, U)
    tol = config.tolerances.get("em_tolerance", 1e-10)
    max_iter = int(config.tolerances.get("em_max_iter", 100000))
    results = multistart_em(U, config.r, config.n_starts, config.seed, tol, max_iter, config.threads)

    comparison = None
    if config.archive_path:
        solver = make_solver(args, config)
        solved = solver.solve(U, config.r, _load(config.archive_path), config.seed, tracker_options(config))
        comparison = compare_em_vs_global(U, config.r, results, solved.points)

    maxima = []
    rows = []
    for i, result in enumerate(results):
        entry = EmMaximumReport(logL=result.log_likelihood, hits=result.hits, iterations=result.iterations,
                                p=result.P.tolist())
        row = [i + 1, result.log_likelihood, result.hits]
        if comparison is not None:
            match = comparison.matches[i]
            entry.critical_index = match.critical_index
            entry.boundary = match.boundary
            entry.status = match.status.value
            entry.kernel_residual = _finite(match.kernel_residual)
            row.append(str(match.critical_index) if match.critical_index is not None else match.status.value.title())
        maxima.append(entry)
        rows.append(row)

    report = EmReportModel(
        model={"m": U.m, "n": U.n, "r": config.r, "symmetric": False},
        config=config,
        input_checksum=array_checksum(U.values),
        n_starts=config.n_starts,
        maxima=maxima,
        global_max_logL=comparison.global_max_log_likelihood if comparison else None,
        global_max_attained=comparison.global_max_attained if comparison else None,
    )
    header = ["rank", "logL", "hits"] + (["critical"] if comparison is not None else [])
    _render(config, report, header, rows, f"\n{len(results)} distinct maxima from {config.n_starts} starts\n")
    return EXIT_OK


def parse_grid(text: str) -> List[float]:
    """Values start, start + step, ... up to stop inclusive"""
    try:
        start, stop, step = (float(part) for part in text.split(":"))
    except ValueError:
        raise ValueError(f"Grid must be start:stop:step, got {text!r}")
    if step <= 0 or stop < start:
        raise ValueError(f"Grid {text!r} is empty")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def cmd_diana(args: argparse.Namespace) -> int:
    config = make_config(args)
    values = parse_grid(config.grid)
    model = RankModel(4, 4, 2)
    archive = _load(config.archive_path)
    if archive is None:
        archive = make_solver(args, config).get_archive(model, config.seed, deep=True)
    if archive.model != model:
        raise ArchiveMismatch(f"DiaNA needs a {model.label()} archive, got {archive.model.label()}")
    rows = diana_sweep(values, archive, config.seed, tracker_options(config), config.threads)
    header = ["a", "total", "real", "positive", "min_distance", "mle_error", "failed_paths"]
    table = [[row.a, row.count_total, row.count_real, row.count_positive, row.min_pairwise_distance,
              row.mle_error, row.failed_paths] for row in rows]
    if config.output_format == "json":
        document = {"model": model.to_dict(), "archive_checksum": archive.checksum,
                    "rows": [{k: _finite(v) if isinstance(v, float) else v for k, v in row.to_dict().items()}
                             for row in rows]}
        _emit(config, canonical_json(document) + "\n")
    else:
        _emit(config, _csv_text(header, table))
    return EXIT_OK


def cmd_certify(args: argparse.Namespace) -> int:
    U = read_matrix(args.matrix)
    config = make_config(args, U)
    solver = make_solver(args, config)
    archive = _load(config.archive_path)
    certificate = solver.certify(U, config.r, archive, config.seed, tracker_options(config))
    model = RankModel(min(U.m, U.n), max(U.m, U.n), config.r, U.symmetric)
    report = CertifyReportModel(
        model=model.to_dict(),
        config=config,
        input_checksum=array_checksum(U.values),
        archive_checksum=archive.checksum if archive is not None else None,
        certified=sum(certificate.certified),
        total=len(certificate.certified),
        min_separation=_finite(certificate.min_separation),
        violations=certificate.violations,
    )
    rows = [[i, ok, c] for i, (ok, c) in enumerate(zip(certificate.certified, certificate.contraction))]
    footer = "".join(f"violation: {v}\n" for v in certificate.violations)
    _render(config, report, ["index", "certified", "contraction"], rows, footer)
    return EXIT_OK if certificate.all_certified else EXIT_VERIFICATION


COMMANDS = {
    "mldeg": cmd_mldeg,
    "solve": cmd_solve,
    "duality": cmd_duality,
    "bounds": cmd_bounds,
    "em": cmd_em,
    "diana": cmd_diana,
    "certify": cmd_certify,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    configure_logging(args.log_level)

    try:
        return COMMANDS[args.subcommand](args)
    except TraceTestFailed as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except (NoBijection, PathFailure, SingularMatrix) as e:
        print(f"Verification failed: {e}", file=sys.stderr)
        return EXIT_VERIFICATION
    except (SchemaMismatch, CorruptArchive, OSError) as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (InvalidModel, ArchiveMismatch, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
