"""Lindblad master equation: right-hand side, RK4 integrator, trace distance.

This is the deterministic oracle every unraveling is checked against.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, StepSizeError

log = logging.getLogger(__name__)

TRACE_DRIFT_LIMIT = 1e-6


def _check(model, rho):
    rho = np.asarray(rho)
    if rho.shape != (model.dim, model.dim):
        raise DimensionError(f"density matrix {rho.shape} does not match model dim {model.dim}")
    return rho


def lindblad_rhs(model, rho, t=0.0):
    """-i[H, rho] + sum_m (L rho L† − ½{L†L, rho})."""
    rho = _check(model, rho)
    hr = model.hamiltonian(t) @ rho
    out = -1j * (hr - hr.conj().T)
    for L, LdL in zip(model.lindblads, model.ldl):
        Lr = L @ rho
        ar = LdL @ rho
        out += Lr @ L.conj().T - 0.5 * (ar + ar.conj().T)
    return out


def pure_density(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


@dataclass
class MasterResult:
    times: np.ndarray
    states: list
    trace_repair: float = 0.0
    hermitian_repair: float = 0.0
    warnings: list = field(default_factory=list)

    def expect(self, op):
        return np.array([np.trace(op @ r) for r in self.states])

    def at(self, t):
        """State at the sampled instant closest to ``t``."""
        return self.states[int(np.argmin(np.abs(self.times - t)))]


def evolve_master(model, rho0, dt, t_final, sample_every=1):
    """Fixed-step RK4 with per-step Hermitian symmetrization and trace renormalization."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    rho = _check(model, rho0).astype(complex)
    n_steps = int(round(t_final / dt))
    hnorm = max(np.linalg.norm(model.hamiltonian(0.0), 2), 1e-300)
    res = MasterResult(times=[0.0], states=[rho.copy()])
    if dt * hnorm > 0.5:
        msg = f"dt*||H|| = {dt * hnorm:.3g}; RK4 step may be inaccurate"
        log.warning(msg)
        res.warnings.append(msg)
    for k in range(n_steps):
        t = k * dt
        k1 = lindblad_rhs(model, rho, t)
        k2 = lindblad_rhs(model, rho + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = lindblad_rhs(model, rho + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = lindblad_rhs(model, rho + dt * k3, t + dt)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        sym = 0.5 * (rho + rho.conj().T)
        res.hermitian_repair += float(np.max(np.abs(sym - rho)))
        tr = np.trace(sym).real
        drift = abs(tr - 1.0)
        if drift > TRACE_DRIFT_LIMIT:
            raise StepSizeError(f"trace drift {drift:.3g} at t={t + dt:.6g}; reduce dt")
        res.trace_repair += drift
        rho = sym / tr
        if (k + 1) % sample_every == 0 or k + 1 == n_steps:
            res.times.append((k + 1) * dt)
            res.states.append(rho.copy())
    res.times = np.array(res.times)
    return res


def trace_distance(rho1, rho2):
    """½ Σ |eigenvalues of (rho1 − rho2)|."""
    rho1 = np.asarray(rho1)
    rho2 = np.asarray(rho2)
    if rho1.shape != rho2.shape:
        raise DimensionError(f"shape mismatch {rho1.shape} vs {rho2.shape}")
    diff = rho1 - rho2
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))
