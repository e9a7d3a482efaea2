import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qtraj import fock
from qtraj.poly import NormalPoly

a, ad, one = NormalPoly.a(), NormalPoly.adag(), NormalPoly.identity()


class Dense:
    """Matrix wrapper where * is the matrix product, mirroring NormalPoly arithmetic."""

    def __init__(self, m):
        self.m = np.asarray(m)

    def __mul__(self, other):
        return Dense(self.m @ other.m) if isinstance(other, Dense) else Dense(self.m * other)

    def __rmul__(self, c):
        return Dense(c * self.m)

    def __add__(self, other):
        return Dense(self.m + other.m)

    def __sub__(self, other):
        return Dense(self.m - other.m)

    def __pow__(self, k):
        return Dense(np.linalg.matrix_power(self.m, k))


def big(dim):
    """Dense a, a† in a space large enough that truncation does not touch the top rows checked."""
    A = fock.make_annihilation(dim)
    return A, A.conj().T


def test_commutator_normal_ordering():
    assert (a * ad).terms == {(1, 1): 1, (0, 0): 1}
    assert (a * ad - ad * a).terms == {(0, 0): 1}


def test_quadratures_match_dense():
    q, p = fock.quadratures(10)
    np.testing.assert_allclose(NormalPoly.q().to_matrix(10), q, atol=1e-14)
    np.testing.assert_allclose(NormalPoly.p().to_matrix(10), p, atol=1e-14)


@pytest.mark.parametrize("expr", [
    lambda x, y, I: x * y * x * y,
    lambda x, y, I: (x + y) ** 4,
    lambda x, y, I: 0.5 * y * y * x - 2j * x * y + 3 * I,
])
def test_products_match_matrix_algebra(expr):
    # products of truncated matrices differ from the truncated product only near the top,
    # so compare in a larger space and look at the leading block
    dim, keep = 40, 20
    A, Ad = big(dim)
    dense = expr(Dense(A), Dense(Ad), Dense(np.eye(dim))).m
    poly = expr(a, ad, one).to_matrix(dim)
    np.testing.assert_allclose(poly[:keep, :keep], dense[:keep, :keep], atol=1e-9)


def test_dag_and_linear_coeffs():
    L = 2 * a + 0.5j * ad - 1
    assert L.linear_coeffs() == (2, 0.5j, -1)
    assert L.dag().terms == {(1, 0): 2, (0, 1): -0.5j, (0, 0): -1}
    with pytest.raises(ValueError):
        (ad * a).linear_coeffs()


@settings(max_examples=30, deadline=None)
@given(st.complex_numbers(max_magnitude=2), st.integers(0, 3), st.integers(0, 3))
def test_frame_shift_is_displacement(alpha, m, n):
    # D(α)† a†^m a^n D(α) = (a† + α*)^m (a + α)^n
    dim, keep = 60, 12
    mono = NormalPoly({(m, n): 1.0})
    shifted = (ad + np.conj(alpha)) ** m * (a + alpha) ** n
    D = fock.displacement_operator(alpha, dim)
    dense = D.conj().T @ mono.to_matrix(dim) @ D
    np.testing.assert_allclose(shifted.to_matrix(dim)[:keep, :keep], dense[:keep, :keep], atol=1e-8)
