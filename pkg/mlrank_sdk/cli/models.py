"""
Pydantic models for the mlrank command line
"""

from datetime import datetime
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator

from ..models import RankModel

OutputFormat = Literal["json", "table", "csv"]


class RunConfig(BaseModel):
    """Effective settings of one CLI invocation (flags over environment)"""
    subcommand: str = Field(..., description="Subcommand being run")
    m: Optional[int] = Field(None, ge=1, description="Number of rows")
    n: Optional[int] = Field(None, ge=1, description="Number of columns")
    r: Optional[int] = Field(None, ge=1, description="Rank bound")
    symmetric: bool = Field(False, description="Symmetric model with doubled diagonal")
    matrix_path: Optional[str] = Field(None, description="Input matrix CSV")
    archive_path: Optional[str] = Field(None, description="Archive JSON file")
    dual_archive_path: Optional[str] = Field(None, description="Archive JSON file for the dual rank")
    output_path: Optional[str] = Field(None, description="Report file (stdout when omitted)")
    seed: int = Field(0, description="Master seed")
    tolerances: Dict[str, float] = Field(default_factory=dict, description="Tolerance overrides by option name")
    output_format: OutputFormat = Field("table", description="Report format")
    threads: int = Field(1, ge=1, description="Worker threads")
    log_level: str = Field("WARNING", description="Level for the mlrank_sdk logger")
    deep: bool = Field(False, description="Use the large monodromy budgets")
    n_starts: Optional[int] = Field(None, ge=1, description="EM starts")
    grid: Optional[str] = Field(None, description="DiaNA grid start:stop:step")

    @model_validator(mode="after")
    def check_model(self) -> "RunConfig":
        if self.symmetric and self.m is not None and self.n is not None and self.m != self.n:
            raise ValueError("Symmetric models need m == n")
        if self.m is not None and self.n is not None and self.r is not None:
            RankModel(self.m, self.n, self.r, self.symmetric)
        return self

    def model(self) -> RankModel:
        if self.n is None or self.r is None:
            raise ValueError(f"'{self.subcommand}' needs -n and -r")
        m = self.n if self.symmetric else self.m
        if m is None:
            raise ValueError(f"'{self.subcommand}' needs -m")
        return RankModel(m, self.n, self.r, self.symmetric)


class PointReport(BaseModel):
    """One classified critical point"""
    index: int = Field(..., description="Position in the archive order")
    p: List[Any] = Field(..., description="Cell probabilities; complex entries as [re, im]")
    logL: Optional[Union[float, str]] = Field(None,
                                            description="Log-likelihood, null when not positive, 'nonreal' if complex")
    real: bool = Field(..., description="Imaginary parts below 1e-8")
    positive: bool = Field(..., description="Real with every cell above 1e-10")
    rank: int = Field(..., description="Numerical rank")
    extremum: str = Field(..., description="Max, Min, Saddle or Untested")
    residual: Optional[float] = Field(None, description="Scaled Newton residual")


class ReportBase(BaseModel):
    """Fields shared by every report"""
    model: Dict[str, Any] = Field(..., description="Rank model (m, n, r, symmetric)")
    config: RunConfig = Field(..., description="Effective run configuration")
    generated_at: datetime = Field(default_factory=datetime.now, description="Report timestamp")


class MLDegreeReport(ReportBase):
    """Result of the mldeg subcommand"""
    ml_degree: int = Field(..., description="Number of critical points found")
    trace_test_passed: bool = Field(..., description="Completeness verdict")
    trace_residual: Optional[float] = Field(None, description="Trace defect relative to scale")
    archive_checksum: Optional[str] = Field(None, description="sha256 of the archive payload")
    known_ml_degree: Optional[int] = Field(None, description="Published value when available")


class SolveReportModel(ReportBase):
    """Result of the solve subcommand"""
    input_checksum: str = Field(..., description="sha256 of the input matrix")
    archive_checksum: Optional[str] = Field(None, description="Archive used for the homotopy")
    points: List[PointReport] = Field(..., description="All critical points")
    summary: Dict[str, int] = Field(..., description="Counts of total, real, positive and extremum types")


class DualityReportModel(ReportBase):
    """Result of the duality subcommand"""
    input_checksum: str = Field(..., description="sha256 of the input matrix")
    dual_rank: int = Field(..., description="Rank paired with r")
    pairs: List[List[int]] = Field(..., description="Index pairs (rank r, dual rank)")
    max_residual: float = Field(..., description="Largest entrywise defect of P * Q - Omega")
    tolerance: float = Field(..., description="Residual bound")
    verified: bool = Field(..., description="max_residual below tolerance")


class BoundsReportModel(ReportBase):
    """Result of the bounds subcommand"""
    bezout: int = Field(..., description="Bezout bound of the kernel system")
    multihomogeneous: int = Field(..., description="Four-homogeneous Bezout bound")
    known_ml_degree: Optional[int] = Field(None, description="Published ML degree when available")


class EmMaximumReport(BaseModel):
    """One deduplicated EM fixed point"""
    logL: float = Field(..., description="Log-likelihood")
    hits: int = Field(..., description="Starts converging here")
    iterations: int = Field(..., description="Iterations of the best run")
    p: List[List[float]] = Field(..., description="Fitted matrix")
    critical_index: Optional[int] = Field(None, description="Matched critical point")
    boundary: Optional[bool] = Field(None, description="Off the critical equations, on the mixture boundary")
    status: Optional[str] = Field(None, description="matched, boundary or unmatched")
    kernel_residual: Optional[float] = Field(None, description="Residual of the kernel equations")


class EmReportModel(ReportBase):
    """Result of the em subcommand"""
    input_checksum: str = Field(..., description="sha256 of the input matrix")
    n_starts: int = Field(..., description="Number of starts")
    maxima: List[EmMaximumReport] = Field(..., description="Distinct maxima by decreasing logL")
    global_max_logL: Optional[float] = Field(None, description="Best positive critical value")
    global_max_attained: Optional[bool] = Field(None, description="Some EM maximum is the global one")


class CertifyReportModel(ReportBase):
    """Result of the certify subcommand"""
    input_checksum: str = Field(..., description="sha256 of the input matrix")
    archive_checksum: Optional[str] = Field(None, description="Archive used for the homotopy")
    certified: int = Field(..., description="Points passing the contraction test")
    total: int = Field(..., description="Points checked")
    min_separation: Optional[float] = Field(None, description="Smallest distance between points")
    violations: List[str] = Field(default_factory=list, description="Failed checks")
