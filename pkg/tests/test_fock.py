import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings, strategies as st

from qtraj import fock
from qtraj.errors import DegenerateStateError, DimensionError


def test_annihilation_dim3():
    a = fock.make_annihilation(3)
    expected = np.zeros((3, 3))
    expected[0, 1] = 1
    expected[1, 2] = np.sqrt(2)
    np.testing.assert_array_equal(a, expected)


def test_annihilation_dim2():
    np.testing.assert_array_equal(fock.make_annihilation(2), [[0, 1], [0, 0]])


def test_number_diagonal_dim30():
    a = fock.make_annihilation(30)
    n = fock.make_creation(30) @ a
    np.testing.assert_allclose(np.diag(n).real, np.arange(30), atol=1e-12)
    np.testing.assert_allclose(n, fock.number_operator(30), atol=1e-12)


@pytest.mark.parametrize("dim", [1, 0, -3, 2.5])
def test_invalid_dimension(dim):
    with pytest.raises(DimensionError):
        fock.make_annihilation(dim)


def test_truncated_commutator():
    d = 6
    a = fock.make_annihilation(d)
    comm = a @ a.conj().T - a.conj().T @ a
    expected = np.eye(d)
    expected[-1, -1] = 1 - d
    np.testing.assert_allclose(comm, expected, atol=1e-12)


def test_expectation_number_state():
    psi = fock.basis_state(3, 8)
    assert fock.expectation(fock.number_operator(8), psi) == pytest.approx(3)
    assert fock.expectation(fock.make_annihilation(8), psi) == 0


def test_expectation_dimension_mismatch():
    with pytest.raises(DimensionError):
        fock.expectation(fock.make_annihilation(4), np.ones(5) / np.sqrt(5))


def test_coherent_state_amplitudes_series():
    # <n|alpha> = exp(-|alpha|^2/2) alpha^n / sqrt(n!)
    alpha = 0.8 - 0.3j
    psi = fock.coherent_state(alpha, 25)
    n = np.arange(25)
    ref = np.exp(-abs(alpha) ** 2 / 2) * alpha**n / np.sqrt(scipy.special.factorial(n))
    np.testing.assert_allclose(psi, ref, atol=1e-14)


def test_coherent_equals_displaced_vacuum():
    for alpha in (0.5, 1 + 1j, -2.0j):
        psi = fock.coherent_state(alpha, 40)
        dvac = fock.displacement_operator(alpha, 40) @ fock.basis_state(0, 40)
        assert fock.tail_mass(psi) < 1e-8
        np.testing.assert_allclose(psi, dvac, atol=1e-6)


def test_coherent_state_mean():
    psi = fock.coherent_state(2 - 1j, 40)
    assert fock.expectation(fock.make_annihilation(40), psi) == pytest.approx(2 - 1j, abs=1e-10)


def test_coherent_state_truncation_warns(caplog):
    psi = fock.coherent_state(3.0, 8)
    assert np.linalg.norm(psi) == pytest.approx(1.0)
    assert "tail mass" in caplog.text


def test_displacement_unitary_and_composition():
    d = 12
    D1 = fock.displacement_operator(0.3, d)
    np.testing.assert_allclose(D1.conj().T @ D1, np.eye(d), atol=1e-12)
    np.testing.assert_allclose(fock.displacement_operator(-0.3, d) @ D1, np.eye(d), atol=1e-12)


def test_normalize():
    psi = fock.normalize(np.array([3.0, 4.0j]))
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DegenerateStateError):
        fock.normalize(np.zeros(4))


def test_tail_mass():
    psi = fock.basis_state(19, 20)
    assert fock.tail_mass(psi) == 1.0
    assert fock.tail_mass(fock.basis_state(17, 20)) == 0.0
    assert fock.tail_mass(fock.basis_state(1, 2)) == 1.0


def test_quadrature_commutator():
    q, p = fock.quadratures(10)
    comm = q @ p - p @ q
    np.testing.assert_allclose(np.diag(comm)[:-1], 1j, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_coherent_property(re, im):
    alpha = complex(re, im)
    psi = fock.coherent_state(alpha, 40)
    a = fock.make_annihilation(40)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)
    assert abs(fock.expectation(a, psi) - alpha) < 1e-9
    # number variance equals mean for a coherent state
    n = fock.number_operator(40)
    mean = fock.expectation(n, psi).real
    var = fock.expectation(n @ n, psi).real - mean**2
    assert var == pytest.approx(abs(alpha) ** 2, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**31))
def test_random_state_normalized(dim, seed):
    psi = fock.random_state(dim, np.random.default_rng(seed))
    assert psi.shape == (dim,)
    assert abs(np.linalg.norm(psi) - 1) < 1e-12
