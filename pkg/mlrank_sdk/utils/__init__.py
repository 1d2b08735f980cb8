"""
Utility functions for mlrank

Provides dense linear algebra wrappers and serialization/checksum helpers.
"""

from .linalg_utils import (
    SvdResult,
    as_complex_matrix,
    eigen_symmetric,
    numerical_rank,
    random_complex,
    random_orthogonal,
    random_unit_complex,
    solve_linear,
    svd,
)
from .checksum_utils import (
    array_checksum,
    canonical_json,
    decode_complex_array,
    encode_complex_array,
    payload_checksum,
)

__all__ = [
    "SvdResult",
    "as_complex_matrix",
    "eigen_symmetric",
    "numerical_rank",
    "random_complex",
    "random_orthogonal",
    "random_unit_complex",
    "solve_linear",
    "svd",
    "array_checksum",
    "canonical_json",
    "decode_complex_array",
    "encode_complex_array",
    "payload_checksum",
]
