"""Invariant suite behind ``qtraj verify``.

Every check is deterministic: stochastic checks run on fixed seeds 0..n-1
and must pass on each of them.
"""
import numpy as np
from scipy import stats

from . import models
from .ensemble import integrate, run_ensemble
from .fock import coherent_state, random_state
from .master import evolve_master, pure_density
from .unravelings import STEPPERS, NoiseStream


def _ho(**kw):
    return models.damped_ho(models.HOParams(**kw))


def check_norm(seeds):
    """Post-renormalization norm within 1e-12 at 50 checkpoints, every stepper, two models."""
    worst = 0.0
    cases = [(_ho(nbar=0.2, force=2.0, dim=16), coherent_state(1.5, 16)),
             (models.duffing(models.DuffingParams(beta=2.0, dim=24)), coherent_state(1 + 0.5j, 24))]
    for seed in range(seeds):
        for model, psi0 in cases:
            for stepper in STEPPERS:
                rec = integrate(model, psi0, stepper, 1e-3, 1000, NoiseStream(seed, 0), sample_every=1000,
                                checkpoint_steps=range(20, 1001, 20))
                worst = max(worst, float(np.max(np.abs(np.linalg.norm(rec.checkpoint_states, axis=1) - 1))))
    return worst <= 1e-12, f"max |norm-1| = {worst:.2e}"


def check_master_bounds(seeds):
    """Hermiticity and trace within 1e-12, eigenvalues >= -1e-10, from random initial states."""
    herm = tr = 0.0
    neg = 0.0
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        for model in (_ho(nbar=0.2, force=1.0, dim=10), models.duffing(models.DuffingParams(beta=1.0, dim=12))):
            rho0 = pure_density(random_state(model.dim, rng))
            res = evolve_master(model, rho0, 1e-3, 1.0, sample_every=100)
            for r in res.states:
                herm = max(herm, float(np.max(np.abs(r - r.conj().T))))
                tr = max(tr, abs(np.trace(r).real - 1))
                neg = min(neg, float(np.linalg.eigvalsh(r).min()))
    ok = herm <= 1e-12 and tr <= 1e-12 and neg >= -1e-10
    return ok, f"max |rho-rho^H| = {herm:.1e}, max |tr-1| = {tr:.1e}, min eigenvalue = {neg:.1e}"


def rk4_order(model, rho0, t_final=1.0, dts=(0.04, 0.02, 0.01), ref_dt=0.0025):
    ref = evolve_master(model, rho0, ref_dt, t_final).states[-1]
    errs = [np.linalg.norm(evolve_master(model, rho0, dt, t_final).states[-1] - ref) for dt in dts]
    return np.log2(np.array(errs[:-1]) / np.array(errs[1:])), errs


def check_rk4_order(seeds):
    """Observed convergence order of the master integrator between 3.5 and 4.5."""
    orders = []
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        model = _ho(nbar=0.2, force=1.0, dim=8)
        order, _ = rk4_order(model, pure_density(random_state(model.dim, rng)))
        orders.extend(order)
    lo, hi = min(orders), max(orders)
    return 3.5 <= lo and hi <= 4.5, f"orders in [{lo:.2f}, {hi:.2f}]"


def check_replay(seeds):
    """Same (seed, stream) gives bit-identical records; ensembles ignore the worker count."""
    model = _ho(nbar=0.2, force=1.0, dim=12)
    psi0 = coherent_state(1.0, 12)
    for seed in range(seeds):
        for stepper in STEPPERS:
            a = integrate(model, psi0, stepper, 1e-3, 500, NoiseStream(seed, 3), sample_every=10)
            b = integrate(model, psi0, stepper, 1e-3, 500, NoiseStream(seed, 3), sample_every=10)
            same = (np.array_equal(a.mean_a, b.mean_a) and np.array_equal(a.final_state, b.final_state)
                    and np.array_equal(a.jump_times, b.jump_times))
            if not same:
                return False, f"{stepper} seed {seed} replay differs"
        e1 = run_ensemble(model, psi0, "qj", 1e-3, 0.5, [0.5], 8, seed, workers=1)
        e4 = run_ensemble(model, psi0, "qj", 1e-3, 0.5, [0.5], 8, seed, workers=4)
        if not np.array_equal(e1.rho, e4.rho):
            return False, f"ensemble seed {seed} depends on worker count"
    return True, "bit-identical across replays and worker counts"


def poisson_counts_pvalue(seed, n_traj=400, t_window=5.0, dt=1e-3, alpha_eq=2.0):
    """Chi-squared p-value of QJ jump counts on a stationary coherent state against Poisson."""
    gamma, omega = 1.0, 1.0
    force = alpha_eq * np.sqrt(2.0) * abs(1j * omega + gamma / 2)
    params = models.HOParams(omega=omega, gamma=gamma, nbar=0.0, force=force, dim=24)
    model = models.damped_ho(params)
    psi0 = coherent_state(models.ho_equilibrium(params), 24)
    n_steps = int(round(t_window / dt))
    counts = np.array([integrate(model, psi0, "qj", dt, n_steps, NoiseStream(seed, i), sample_every=n_steps)
                       .jump_times.size for i in range(n_traj)])
    mu = gamma * alpha_eq**2 * t_window
    # bins with expected count >= 5, tails merged
    ks = np.arange(counts.max() + 50)
    pmf = stats.poisson.pmf(ks, mu)
    lo = int(np.argmax(pmf * n_traj >= 5))
    hi = int(len(ks) - np.argmax((pmf * n_traj >= 5)[::-1]) - 1)
    edges = np.arange(lo, hi + 1)
    expected = np.concatenate([[stats.poisson.cdf(lo, mu)], pmf[lo + 1:hi], [stats.poisson.sf(hi - 1, mu)]])
    observed = np.concatenate([[np.sum(counts <= lo)], [np.sum(counts == k) for k in edges[1:-1]],
                               [np.sum(counts >= hi)]])
    return stats.chisquare(observed, expected * n_traj).pvalue, counts.mean(), mu


def check_poisson(seeds):
    """Jump counts on a stationary coherent state pass chi-squared against Poisson at 0.01."""
    ps = []
    for seed in range(seeds):
        p, _, _ = poisson_counts_pvalue(seed)
        ps.append(p)
    return min(ps) > 0.01, f"min p-value {min(ps):.3f} over {seeds} seeds"


def check_mean_reproduction(seeds):
    """Ensemble average of 400 trajectories within 3/sqrt(N) of the master equation, every stepper."""
    worst = 0.0
    bound = 3 / np.sqrt(400)
    for seed in range(min(seeds, 3)):
        for stepper in STEPPERS:
            force = 2.0 if stepper == "qj_diffusive" else 0.0
            model = _ho(nbar=0.2, force=force, dim=12)
            s = run_ensemble(model, coherent_state(1.0, 12), stepper, 1e-3, 1.0, [0.5, 1.0], 400, seed)
            worst = max(worst, float(s.trace_distance.max()))
    return worst <= bound, f"max trace distance {worst:.3f} (bound {bound:.3f})"


CHECKS = [
    ("norm preservation", check_norm),
    ("master hermiticity/trace/positivity", check_master_bounds),
    ("rk4 convergence order", check_rk4_order),
    ("bit-exact replay", check_replay),
    ("poisson jump counts", check_poisson),
    ("unraveling mean reproduction", check_mean_reproduction),
]


def run_all(seeds=10):
    """Yield (name, passed, detail) for every check."""
    for name, fn in CHECKS:
        passed, detail = fn(seeds)
        yield name, bool(passed), detail
