import numpy as np
import pytest

from qtraj import fock, models
from qtraj.ensemble import (average_projectors, integrate, jump_statistics, map_trajectories,
                            poincare_points, run_ensemble, run_trajectory, strobe, worker_count)
from qtraj.errors import InvalidWindowError, TrajectoryFailure, UndersampledError
from qtraj.unravelings import NoiseStream


def test_zero_length_run(thermal_ho):
    psi0 = fock.coherent_state(0.5, thermal_ho.dim)
    rec = run_trajectory(thermal_ho, psi0, "qsd", 1e-3, 0.0)
    assert rec.times.tolist() == [0.0]
    np.testing.assert_allclose(rec.final_state, psi0)
    assert rec.jump_times.size == 0


def test_single_trajectory_is_rank_one(thermal_ho):
    s = run_ensemble(thermal_ho, fock.coherent_state(0.5, thermal_ho.dim), "qsd", 1e-3, 0.5, [0.5], 1, 0)
    ev = np.linalg.eigvalsh(s.rho[0])
    assert ev[-1] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.abs(ev[:-1]) < 1e-12)


def test_no_jumps_without_dissipation():
    m = models.damped_ho(models.HOParams(gamma=0.0, nbar=0.0, dim=10))
    assert m.n_channels == 0
    rec = run_trajectory(m, fock.coherent_state(1.0, 10), "qj", 1e-3, 1.0)
    assert rec.jump_times.size == 0


def test_no_jumps_from_vacuum_at_zero_temperature():
    m = models.damped_ho(models.HOParams(nbar=0.0, dim=10))
    recs = [run_trajectory(m, fock.basis_state(0, 10), "qj", 1e-3, 1.0, stream_id=i) for i in range(5)]
    rate, mag = jump_statistics(recs, (0.0, 1.0), 1)
    assert rate[0] == 0 and np.isnan(mag[0])


def test_invalid_window(thermal_ho):
    rec = run_trajectory(thermal_ho, fock.basis_state(0, thermal_ho.dim), "qj", 1e-3, 0.1)
    with pytest.raises(InvalidWindowError):
        jump_statistics([rec], (1.0, 1.0))
    with pytest.raises(InvalidWindowError):
        jump_statistics([rec], (2.0, 1.0))


def test_jump_statistics_counts_by_channel():
    class R:
        def __init__(self, t, c, m):
            self.jump_times, self.jump_channels, self.jump_magnitudes = np.array(t), np.array(c), np.array(m)
    recs = [R([0.5, 1.5, 2.5], [0, 1, 1], [0.1, 0.2, 0.4]), R([3.5], [0], [0.3])]
    rate, mag = jump_statistics(recs, (1.0, 4.0), 2)
    np.testing.assert_allclose(rate, [1 / 6, 2 / 6])
    np.testing.assert_allclose(mag, [0.3, 0.3])


def test_strobe_constant_signal():
    t = np.linspace(0, 20, 2001)
    pts = strobe(t, np.full_like(t, 0.5), np.full_like(t, -1.0), 2.0, 4.0)
    assert pts.shape == (9, 2)
    np.testing.assert_allclose(pts, [[0.5, -1.0]] * 9)


def test_strobe_picks_phase():
    t = np.linspace(0, 10 * np.pi, 5001)
    pts = strobe(t, np.cos(t), np.sin(t), 2 * np.pi)
    np.testing.assert_allclose(pts, [[1.0, 0.0]] * 6, atol=1e-5)


def test_strobe_undersampled():
    t = np.arange(0, 10, 1.0)
    with pytest.raises(UndersampledError):
        strobe(t, t, t, 1.5)


def test_poincare_scaling(thermal_ho):
    rec = run_trajectory(thermal_ho, fock.coherent_state(1.0, thermal_ho.dim), "qsd", 1e-2, 5.0)
    a = poincare_points(rec, 1.0)
    b = poincare_points(rec, 1.0, scale=4.0)
    np.testing.assert_allclose(b, a / 4)


def test_projector_sum_is_order_stable(rng):
    states = np.array([fock.random_state(6, rng) for _ in range(50)])
    a = average_projectors(states)
    b = average_projectors(states, group=7)
    np.testing.assert_allclose(a, b, atol=1e-15)
    assert np.trace(a).real == pytest.approx(1.0)


def test_workers_do_not_change_results(thermal_ho):
    psi0 = fock.coherent_state(1.0, thermal_ho.dim)
    for stepper in ("qsd", "qj"):
        one = run_ensemble(thermal_ho, psi0, stepper, 1e-3, 0.5, [0.25, 0.5], 12, 5, workers=1)
        many = run_ensemble(thermal_ho, psi0, stepper, 1e-3, 0.5, [0.25, 0.5], 12, 5, workers=4)
        np.testing.assert_array_equal(one.rho, many.rho)
        np.testing.assert_array_equal(one.jump_rate, many.jump_rate)


def test_worker_env(monkeypatch):
    monkeypatch.setenv("QTRAJ_WORKERS", "3")
    assert worker_count() == 3
    monkeypatch.delenv("QTRAJ_WORKERS")
    assert worker_count() >= 1


def test_map_trajectories_order():
    assert map_trajectories(lambda i: i * i, 20, workers=4) == [i * i for i in range(20)]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_trajectory_failure_reports_stream():
    from qtraj.system import ModelSpec
    m = ModelSpec(h_static=np.diag([0.0, 1e300]))
    with pytest.raises(TrajectoryFailure) as info:
        run_ensemble(m, np.array([0, 1], complex), "qsd", 1e10, 2e10, [], 3, 0, workers=1)
    assert info.value.stream_id == 0
    assert info.value.t == 0.0


def test_coherent_state_stays_coherent():
    # zero temperature damping keeps a coherent state coherent along every QSD trajectory
    m = models.damped_ho(models.HOParams(force=1.0, dim=30))
    rec = run_trajectory(m, fock.coherent_state(2.0, 30), "qsd", 1e-4, 2.0, sample_every=1000)
    assert np.max(rec.delta_alpha_sq) < 1e-6


def test_ensemble_matches_master_small(thermal_ho):
    s = run_ensemble(thermal_ho, fock.coherent_state(1.0, thermal_ho.dim), "qsd", 1e-3, 1.0, [1.0], 400, 11)
    assert s.trace_distance[0] < 3 / np.sqrt(400)


def test_checkpoint_zero_is_initial(thermal_ho):
    psi0 = fock.coherent_state(1.0, thermal_ho.dim)
    s = run_ensemble(thermal_ho, psi0, "qj", 1e-3, 0.2, [0.0], 4, 0)
    np.testing.assert_allclose(s.rho[0], np.outer(psi0, psi0.conj()), atol=1e-15)


def test_dense_and_kernel_agree(forced_ho):
    psi0 = fock.coherent_state(0.5, forced_ho.dim)
    for stepper in ("qsd", "qj_diffusive", "qj"):
        a = integrate(forced_ho, psi0, stepper, 1e-3, 300, NoiseStream(2, 1), sample_every=30, backend="kernel")
        b = integrate(forced_ho, psi0, stepper, 1e-3, 300, NoiseStream(2, 1), sample_every=30, backend="dense")
        np.testing.assert_allclose(a.mean_a, b.mean_a, atol=1e-10)
        np.testing.assert_array_equal(a.jump_channels, b.jump_channels)
        np.testing.assert_allclose(a.jump_times, b.jump_times)
