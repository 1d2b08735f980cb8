"""
Root-count bounds for mlrank

Bezout and 4-homogeneous upper bounds on the number of solutions of the
kernel system, plus the table of known ML degrees used to sanity-check
solver output. All values are exact Python integers.
"""

import functools
import logging
from math import comb
from typing import Dict, Optional, Tuple

from .exceptions import InvalidModel
from .models import BoundReport, RankModel

logger = logging.getLogger(__name__)

# (m, n, r) with m <= n -> ML degree of the general model
_GENERAL_ML_DEGREES: Dict[Tuple[int, int, int], int] = {
    (3, 3, 2): 10,
    (3, 4, 2): 26,
    (3, 5, 2): 58,
    (4, 4, 2): 191,
    (4, 4, 3): 191,
    (4, 5, 2): 843,
    (4, 5, 3): 843,
    (4, 6, 2): 3119,
    (4, 6, 3): 3119,
    (5, 5, 2): 6776,
    (5, 5, 3): 61326,
    (5, 5, 4): 6776,
}

# (n, r) -> ML degree of the symmetric model
_SYMMETRIC_ML_DEGREES: Dict[Tuple[int, int], int] = {
    (3, 2): 6,
    (4, 2): 37,
    (4, 3): 37,
    (5, 2): 270,
    (5, 3): 1394,
    (5, 4): 270,
    (6, 2): 2341,
    (6, 5): 2341,
}


def _check_triple(m: int, n: int, r: int) -> None:
    if not 1 <= r < m <= n:
        raise InvalidModel(f"Bounds need 1 <= r < m <= n, got (m, n, r) = ({m}, {n}, {r})")


def _exponents(m: int, n: int, r: int) -> Tuple[int, int, int, int]:
    """Target exponents of w, x, y, z: sizes of the P1, L1, R1 and Lambda blocks"""
    return r * r, r * (m - r), r * (n - r), (n - r) * (m - r)


def bezout_bound(m: int, n: int, r: int) -> int:
    """
    Total-degree bound 2^r 3^(n-r) 4^(n(m-1))

    Args:
        m: rows
        n: columns
        r: rank bound

    Returns:
        Exact integer bound
    """
    _check_triple(m, n, r)
    return 2 ** r * 3 ** (n - r) * 4 ** (n * (m - 1))


@functools.lru_cache(maxsize=None)
def multihomogeneous_bound(m: int, n: int, r: int) -> int:
    """
    4-homogeneous bound for the variable groups (P1, L1, R1, Lambda)

    The bound is the coefficient of w^a x^b y^c z^e in
    (w+x)^r (w+x+y)^(n-r) (w+x+y+z)^(n(m-1)). Only the last factor contains
    z and only the last two contain y, so the coefficient factors into
    three binomials.
    """
    _check_triple(m, n, r)
    a, b, c, e = _exponents(m, n, r)
    k = n * (m - 1)
    return comb(k, e) * comb(n - r + k - e, c) * comb(a + b, a)


def expanded_coefficient(m: int, n: int, r: int) -> int:
    """
    Same coefficient as multihomogeneous_bound, by direct polynomial expansion

    Monomials are dicts keyed by exponent tuples; terms that already exceed
    a target exponent are dropped after each multiplication.
    """
    _check_triple(m, n, r)
    target = _exponents(m, n, r)
    factors = [(2, r), (3, n - r), (4, n * (m - 1))]

    poly: Dict[Tuple[int, ...], int] = {(0, 0, 0, 0): 1}
    for width, power in factors:
        for _ in range(power):
            product: Dict[Tuple[int, ...], int] = {}
            for exps, coef in poly.items():
                for var in range(width):
                    if exps[var] == target[var]:
                        continue
                    bumped = exps[:var] + (exps[var] + 1,) + exps[var + 1:]
                    product[bumped] = product.get(bumped, 0) + coef
            poly = product
    return poly.get(target, 0)


def known_ml_degree(m: int, n: int, r: int, symmetric: bool = False) -> Optional[int]:
    """
    Published ML degree of the rank-r model, or None if not tabulated

    Rank 1 and full rank always have ML degree 1.
    """
    if symmetric:
        if m != n:
            raise InvalidModel("Symmetric models need m == n")
        if r in (1, n):
            return 1
        return _SYMMETRIC_ML_DEGREES.get((n, r))
    m, n = min(m, n), max(m, n)
    if r in (1, m):
        return 1
    return _GENERAL_ML_DEGREES.get((m, n, r))


def conjectured_ml_degree(m: int, n: int, r: int) -> int:
    """
    ML degree 2^(n+1) - 6 conjectured for 3 x n matrices of rank 2

    Raises:
        InvalidModel: for any other shape
    """
    if (m, r) != (3, 2) or n < 3:
        raise InvalidModel(f"The closed formula covers (3, n, 2) with n >= 3, got ({m}, {n}, {r})")
    return 2 ** (n + 1) - 6


def bound_report(model: RankModel) -> BoundReport:
    """Both bounds and the known ML degree for a general model"""
    if model.symmetric:
        raise InvalidModel("Root-count bounds are tabulated for general models only")
    m, n = min(model.m, model.n), max(model.m, model.n)
    report = BoundReport(
        model=model,
        bezout=bezout_bound(m, n, model.r),
        multihomogeneous=multihomogeneous_bound(m, n, model.r),
        known_ml_degree=known_ml_degree(m, n, model.r),
    )
    logger.debug("Bounds for %s: bezout=%d 4-hom=%d", model.label(), report.bezout, report.multihomogeneous)
    return report
