"""
Serialization helpers for mlrank

Complex arrays are written as nested [re, im] pairs of Python floats, whose
JSON repr keeps all 17 significant digits. Checksums are sha256 over the
canonical (sorted-key, compact) JSON text of a payload.
"""

import hashlib
import json
from typing import Any, List

import numpy as np


def encode_complex_array(array: np.ndarray) -> List[Any]:
    """Nested lists with every complex entry replaced by [re, im]"""
    array = np.asarray(array, dtype=complex)
    if array.ndim == 0:
        return [float(array.real), float(array.imag)]
    return [encode_complex_array(item) for item in array]


def decode_complex_array(data: List[Any]) -> np.ndarray:
    """Inverse of encode_complex_array"""
    raw = np.asarray(data, dtype=float)
    if raw.shape[-1] != 2:
        raise ValueError(f"Expected [re, im] pairs, got trailing dimension {raw.shape[-1]}")
    return raw[..., 0] + 1j * raw[..., 1]


def canonical_json(payload: Any) -> str:
    """Deterministic JSON text used for checksums and byte-identical reports"""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)


def payload_checksum(payload: Any) -> str:
    """sha256 hex digest of the canonical JSON form"""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def array_checksum(array: np.ndarray) -> str:
    """sha256 of a numeric array's canonical encoding"""
    array = np.asarray(array)
    if np.iscomplexobj(array):
        return payload_checksum(encode_complex_array(array))
    return payload_checksum(np.asarray(array, dtype=float).tolist())
