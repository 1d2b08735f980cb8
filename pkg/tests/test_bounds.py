"""
Tests for the root-count bounds and the ML degree tables
"""

import pytest

from mlrank_sdk.bounds import (
    bezout_bound,
    bound_report,
    conjectured_ml_degree,
    expanded_coefficient,
    known_ml_degree,
    multihomogeneous_bound,
)
from mlrank_sdk.exceptions import InvalidModel
from mlrank_sdk.models import RankModel

# (m, n, r) -> (Bezout, 4-homogeneous)
PUBLISHED_BOUNDS = {
    (3, 3, 1): (73728, 270),
    (3, 3, 2): (49152, 1350),
    (3, 4, 1): (3538944, 840),
    (3, 4, 2): (2359296, 29400),
    (3, 5, 1): (169869312, 2025),
    (3, 5, 2): (113246208, 378000),
    (4, 4, 1): (905969664, 17600),
    (4, 4, 2): (603979776, 7276500),
    (4, 4, 3): (402653184, 580800),
    (4, 5, 1): (173946175488, 63700),
    (4, 5, 2): (115964116992, 323723400),
    (4, 5, 3): (77309411328, 115615500),
}


class TestBounds:
    """Test the closed-form bounds"""

    @pytest.mark.parametrize("triple", sorted(PUBLISHED_BOUNDS))
    def test_bezout(self, triple):
        """Test the total-degree bound against the published values"""
        assert bezout_bound(*triple) == PUBLISHED_BOUNDS[triple][0]

    @pytest.mark.parametrize("triple", sorted(PUBLISHED_BOUNDS))
    def test_multihomogeneous(self, triple):
        """Test the 4-homogeneous bound against the published values"""
        assert multihomogeneous_bound(*triple) == PUBLISHED_BOUNDS[triple][1]

    @pytest.mark.parametrize("triple", [(3, 3, 1), (3, 3, 2), (3, 4, 2), (4, 4, 2)])
    def test_expansion_agrees_with_closed_form(self, triple):
        """Test the binomial formula against direct polynomial expansion"""
        assert expanded_coefficient(*triple) == multihomogeneous_bound(*triple)

    def test_bounds_dominate_ml_degree(self):
        """Test that every known ML degree is below both bounds"""
        for triple, (bezout, multi) in PUBLISHED_BOUNDS.items():
            degree = known_ml_degree(*triple)
            if degree is not None:
                assert degree <= multi <= bezout

    def test_invalid_triples(self):
        """Test that r >= m or m > n is refused"""
        with pytest.raises(InvalidModel):
            bezout_bound(3, 3, 3)
        with pytest.raises(InvalidModel):
            multihomogeneous_bound(4, 3, 1)
        with pytest.raises(InvalidModel):
            bezout_bound(3, 3, 0)


class TestKnownDegrees:
    """Test the ML degree tables"""

    def test_general_values(self):
        """Test tabulated general ML degrees"""
        assert known_ml_degree(3, 3, 1) == 1
        assert known_ml_degree(3, 3, 2) == 10
        assert known_ml_degree(3, 3, 3) == 1
        assert known_ml_degree(4, 3, 2) == 26
        assert known_ml_degree(4, 4, 2) == 191
        assert known_ml_degree(4, 5, 2) == 843
        assert known_ml_degree(6, 6, 3) is None

    def test_symmetric_values(self):
        """Test tabulated symmetric ML degrees"""
        assert known_ml_degree(3, 3, 2, symmetric=True) == 6
        assert known_ml_degree(4, 4, 2, symmetric=True) == 37
        assert known_ml_degree(4, 4, 3, symmetric=True) == 37
        assert known_ml_degree(5, 5, 1, symmetric=True) == 1
        with pytest.raises(InvalidModel):
            known_ml_degree(3, 4, 2, symmetric=True)

    def test_three_row_formula(self):
        """Test 2^(n+1) - 6 against the known 3 x n values"""
        for n in (3, 4, 5):
            assert conjectured_ml_degree(3, n, 2) == known_ml_degree(3, n, 2)
        assert conjectured_ml_degree(3, 6, 2) == 122
        with pytest.raises(InvalidModel):
            conjectured_ml_degree(4, 4, 2)

    def test_bound_report(self):
        """Test the combined report, including transposed shapes"""
        report = bound_report(RankModel(4, 3, 2))

        assert report.bezout == 2359296
        assert report.multihomogeneous == 29400
        assert report.known_ml_degree == 26
        assert report.to_dict()["model"]["m"] == 4
        with pytest.raises(InvalidModel):
            bound_report(RankModel(3, 3, 2, symmetric=True))


if __name__ == "__main__":
    pytest.main([__file__])
