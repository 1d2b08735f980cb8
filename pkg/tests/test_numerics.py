"""
Tests for the dense linear algebra helpers
"""

import numpy as np
import pytest

from mlrank_sdk.exceptions import SingularMatrix
from mlrank_sdk.utils.linalg_utils import (
    as_complex_matrix,
    eigen_symmetric,
    numerical_rank,
    random_complex,
    random_orthogonal,
    random_unit_complex,
    solve_linear,
    svd,
)
from mlrank_sdk.utils.checksum_utils import (
    array_checksum,
    canonical_json,
    decode_complex_array,
    encode_complex_array,
    payload_checksum,
)


class TestSolveLinear:
    """Test LU solves"""

    def test_complex_system(self):
        """Test that a random complex system is solved to rounding"""
        rng = np.random.default_rng(3)
        A = random_complex((6, 6), rng)
        x = random_complex(6, rng)
        b = A @ x

        assert np.allclose(solve_linear(A, b), x, atol=1e-10)

    def test_singular_matrix_raises(self):
        """Test that a rank-deficient matrix is rejected"""
        A = np.array([[1.0, 2.0], [2.0, 4.0]])

        with pytest.raises(SingularMatrix):
            solve_linear(A, np.array([1.0, 1.0]))

    def test_zero_matrix_raises(self):
        """Test that the zero matrix is singular"""
        with pytest.raises(SingularMatrix):
            solve_linear(np.zeros((3, 3)), np.ones(3))

    def test_shape_mismatch(self):
        """Test that mismatched shapes raise ValueError"""
        with pytest.raises(ValueError):
            solve_linear(np.eye(3), np.ones(2))
        with pytest.raises(ValueError):
            solve_linear(np.ones((2, 3)), np.ones(2))


class TestSvd:
    """Test the SVD wrapper"""

    def test_reconstruct_rectangular(self):
        """Test that the factors rebuild a rectangular matrix"""
        rng = np.random.default_rng(0)
        A = random_complex((3, 5), rng)
        result = svd(A)

        assert np.allclose(result.reconstruct(), A, atol=1e-12)
        assert np.all(np.diff(result.singular_values) <= 1e-14)

    def test_rank(self):
        """Test numerical rank of a product of thin factors"""
        rng = np.random.default_rng(1)
        A = rng.standard_normal((5, 2)) @ rng.standard_normal((2, 4))

        assert numerical_rank(A) == 2
        assert numerical_rank(np.zeros((3, 3))) == 0
        assert numerical_rank(np.eye(4)) == 4

    def test_non_finite_input(self):
        """Test that NaN input is rejected"""
        with pytest.raises(ValueError):
            svd(np.array([[np.nan, 1.0], [0.0, 1.0]]))


class TestEigenSymmetric:
    """Test the symmetric eigensolver"""

    def test_descending_order(self):
        """Test that eigenvalues come largest first"""
        A = np.diag([1.0, -3.0, 2.0])

        assert np.allclose(eigen_symmetric(A), [2.0, 1.0, -3.0])

    def test_rejects_asymmetric(self):
        """Test that clearly asymmetric input raises"""
        with pytest.raises(ValueError):
            eigen_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_tiny_asymmetry_is_symmetrized(self):
        """Test that rounding-level asymmetry is accepted"""
        A = np.array([[2.0, 1.0], [1.0 + 1e-15, 2.0]])

        assert np.allclose(eigen_symmetric(A), [3.0, 1.0])


class TestRandomHelpers:
    """Test seeded random matrices"""

    def test_orthogonal(self):
        """Test orthogonality and determinism"""
        Q1 = random_orthogonal(4, np.random.default_rng(5))
        Q2 = random_orthogonal(4, np.random.default_rng(5))

        assert np.allclose(Q1.T @ Q1, np.eye(4), atol=1e-12)
        assert np.array_equal(Q1, Q2)
        assert random_orthogonal(0, np.random.default_rng(5)).shape == (0, 0)

    def test_unit_complex(self):
        """Test that gamma lies on the unit circle"""
        gamma = random_unit_complex(np.random.default_rng(9))

        assert abs(abs(gamma) - 1.0) < 1e-14

    def test_as_complex_matrix(self):
        """Test validation of matrix input"""
        assert as_complex_matrix([[1, 2], [3, 4]], rows=2, cols=2).dtype == complex
        with pytest.raises(ValueError):
            as_complex_matrix([1, 2, 3])
        with pytest.raises(ValueError):
            as_complex_matrix([[1, 2]], rows=2)
        with pytest.raises(ValueError):
            as_complex_matrix([[np.inf, 1.0]])


class TestChecksums:
    """Test serialization helpers"""

    def test_complex_encoding_keeps_all_digits(self):
        """Test that complex values survive the [re, im] encoding exactly"""
        rng = np.random.default_rng(2)
        array = random_complex((2, 3), rng)

        assert np.array_equal(decode_complex_array(encode_complex_array(array)), array)

    def test_canonical_json_sorted(self):
        """Test that key order does not change the checksum"""
        assert canonical_json({"b": 1, "a": 2}) == '{"a":2,"b":1}'
        assert payload_checksum({"b": 1, "a": 2}) == payload_checksum({"a": 2, "b": 1})

    def test_array_checksum_sensitive(self):
        """Test that a one-ulp change alters the checksum"""
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = a.copy()
        b[0, 0] = np.nextafter(1.0, 2.0)

        assert array_checksum(a) != array_checksum(b)
        assert len(array_checksum(a)) == 64

    def test_nan_rejected(self):
        """Test that non-finite payloads cannot be checksummed"""
        with pytest.raises(ValueError):
            canonical_json({"x": float("nan")})


if __name__ == "__main__":
    pytest.main([__file__])
