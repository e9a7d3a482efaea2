import numpy as np
import pytest

from qtraj import fock, models
from qtraj.errors import DimensionError, StepSizeError
from qtraj.master import evolve_master, lindblad_rhs, pure_density, trace_distance
from qtraj.system import ModelSpec
from qtraj.verify import rk4_order


def number_model(dim, omega=1.0, gamma=None):
    a = fock.make_annihilation(dim)
    ls = [] if gamma is None else [np.sqrt(gamma) * a]
    return ModelSpec(h_static=omega * a.conj().T @ a, lindblads=ls)


def test_rhs_decay_of_one_photon():
    g = 0.7
    m = number_model(4, gamma=g)
    rhs = lindblad_rhs(m, pure_density(fock.basis_state(1, 4)))
    expected = np.zeros((4, 4))
    expected[0, 0], expected[1, 1] = g, -g
    np.testing.assert_allclose(rhs, expected, atol=1e-14)


def test_rhs_ground_state_stationary():
    m = number_model(5)
    np.testing.assert_allclose(lindblad_rhs(m, pure_density(fock.basis_state(0, 5))), 0, atol=1e-15)


def test_rhs_mean_field_drift():
    p = models.HOParams(omega=1.3, gamma=0.8, dim=40)
    m = models.damped_ho(p)
    alpha = 1.5 - 0.5j
    rho = pure_density(fock.coherent_state(alpha, 40))
    da = np.trace(fock.make_annihilation(40) @ lindblad_rhs(m, rho))
    assert da == pytest.approx((-1j * p.omega - p.gamma / 2) * alpha, abs=1e-9)


def test_rhs_traceless_hermitian_random(rng):
    for dim in (2, 5, 12):
        H = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        H = H + H.conj().T
        Ls = [rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)) for _ in range(2)]
        m = ModelSpec(h_static=H, lindblads=Ls)
        rho = pure_density(fock.random_state(dim, rng))
        r = lindblad_rhs(m, rho)
        assert abs(np.trace(r)) < 1e-10
        assert np.max(np.abs(r - r.conj().T)) < 1e-10


def test_rhs_shape_mismatch():
    with pytest.raises(DimensionError):
        lindblad_rhs(number_model(4), np.eye(5) / 5)


def test_photon_number_decay():
    m = number_model(6, gamma=0.5)
    res = evolve_master(m, pure_density(fock.basis_state(1, 6)), 1e-3, 1.0)
    n = np.trace(fock.number_operator(6) @ res.states[-1]).real
    assert n == pytest.approx(np.exp(-0.5), abs=1e-6)


def test_thermal_steady_state(thermal_ho):
    res = evolve_master(thermal_ho, pure_density(fock.basis_state(0, 12)), 5e-3, 20.0, sample_every=400)
    n = np.trace(fock.number_operator(12) @ res.states[-1]).real
    assert n == pytest.approx(0.2, abs=1e-3)


def test_forced_steady_state_displacement():
    for force in (1.0, 2.0):
        p = models.HOParams(force=force, dim=25)
        res = evolve_master(models.damped_ho(p), pure_density(fock.basis_state(0, 25)), 5e-3, 25.0, sample_every=1000)
        a = np.trace(fock.make_annihilation(25) @ res.states[-1])
        assert a == pytest.approx(models.ho_equilibrium(p), abs=1e-4)
    # |alpha_eq| is linear in the force
    assert abs(models.ho_equilibrium(models.HOParams(force=4.0))) == pytest.approx(
        2 * abs(models.ho_equilibrium(models.HOParams(force=2.0))))


def test_unitary_spectrum_constant(rng):
    m = ModelSpec(h_static=np.diag(np.arange(6.0)) + 0.3 * (fock.make_annihilation(6) + fock.make_creation(6)))
    rho0 = 0.7 * pure_density(fock.random_state(6, rng)) + 0.3 * pure_density(fock.random_state(6, rng))
    res = evolve_master(m, rho0, 1e-3, 1.0, sample_every=250)
    ev0 = np.linalg.eigvalsh(rho0)
    for r in res.states:
        np.testing.assert_allclose(np.linalg.eigvalsh(r), ev0, atol=1e-8)


def test_density_invariants_on_bundled_models(rng):
    for m in (models.damped_ho(models.HOParams(nbar=0.2, force=1.0, dim=10)),
              models.duffing(models.DuffingParams(beta=1.0, dim=12))):
        res = evolve_master(m, pure_density(fock.random_state(m.dim, rng)), 1e-3, 2.0, sample_every=100)
        for r in res.states:
            assert np.max(np.abs(r - r.conj().T)) <= 1e-10
            assert abs(np.trace(r) - 1) <= 1e-9
            assert np.linalg.eigvalsh(r).min() >= -1e-8


def test_rk4_fourth_order(thermal_ho):
    # halving dt cuts the error by about 16x
    order, errs = rk4_order(thermal_ho, pure_density(fock.coherent_state(1.0, 12)))
    assert np.all(order > 3.7) and np.all(order < 4.3), (order, errs)


def test_step_size_error():
    m = number_model(8, gamma=50.0)
    with pytest.raises(StepSizeError):
        evolve_master(m, pure_density(fock.basis_state(7, 8)), 0.2, 1.0)


def test_large_step_warns():
    m = number_model(8)
    res = evolve_master(m, pure_density(fock.basis_state(1, 8)), 0.2, 0.4)
    assert res.warnings


def test_trace_distance_examples():
    r0 = pure_density(fock.basis_state(0, 3))
    r1 = pure_density(fock.basis_state(1, 3))
    assert trace_distance(r0, r0) == 0
    assert trace_distance(r0, r1) == pytest.approx(1.0)
    assert trace_distance(r0, 0.5 * (r0 + r1)) == pytest.approx(0.5)
    with pytest.raises(DimensionError):
        trace_distance(r0, np.eye(4))


def test_trace_distance_metric(rng):
    rs = [pure_density(fock.random_state(5, rng)) for _ in range(3)]
    assert trace_distance(rs[0], rs[1]) == pytest.approx(trace_distance(rs[1], rs[0]))
    assert trace_distance(rs[0], rs[2]) <= trace_distance(rs[0], rs[1]) + trace_distance(rs[1], rs[2]) + 1e-12
