"""
Exceptions for mlrank

Every error raised by the solver derives from MLRankError so callers can
catch the whole family at once.
"""


class MLRankError(Exception):
    """Base class for all solver errors"""


class SingularMatrix(MLRankError):
    """Pivot magnitude fell below the singularity threshold"""


class ConvergenceFailure(MLRankError):
    """An iterative decomposition hit its iteration cap"""


class NonpositiveProbability(MLRankError, ValueError):
    """A probability entry is zero or negative where a log is required"""


class InvalidModel(MLRankError, ValueError):
    """The (m, n, r, symmetric) combination cannot be solved as requested"""


class DegenerateSeed(MLRankError):
    """A random seed produced p_++ too close to zero to rescale"""


class PathFailure(MLRankError):
    """Too many paths of a transport batch failed"""

    def __init__(self, message: str, results=None):
        super().__init__(message)
        self.results = results or []


class TraceTestFailed(MLRankError):
    """Monodromy could not certify completeness within its loop budget"""

    def __init__(self, message: str, archive=None):
        super().__init__(message)
        self.archive = archive


class SchemaMismatch(MLRankError, ValueError):
    """Archive version or layout is not the one this code writes"""


class CorruptArchive(MLRankError, ValueError):
    """Archive checksum does not match its payload"""


class ArchiveMismatch(MLRankError, ValueError):
    """Archive model does not match the data being solved"""


class RankDeficient(MLRankError):
    """Critical point has numerical rank below the model rank"""


class NoBijection(MLRankError):
    """Duality matching could not pair every point"""


class NumericalUnderflow(MLRankError):
    """EM responsibilities vanished"""


class NotRank2(MLRankError, ValueError):
    """Matrix handed to the rank-2 factorization does not have rank 2"""


class NotNonnegative(MLRankError, ValueError):
    """Matrix handed to the rank-2 factorization has negative entries"""
