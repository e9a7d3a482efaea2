"""Stochastic unravelings of the Lindblad equation: QSD, quantum jumps, and the
diffusive limit of quantum jumps.

The single-step functions here operate on dense operators and are the
reference implementation.  Long runs go through the compiled loops in
:mod:`qtraj._kernels` (see :mod:`qtraj.ensemble`), which consume the noise
stream in exactly the same order.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateJumpError, NumericalBlowupError, PhaseSingularityError

log = logging.getLogger(__name__)

STEPPERS = ("qsd", "qj", "qj_diffusive")
JUMP_RATE_FLOOR = 1e-14
PHASE_FLOOR = 1e-12


class NoiseStream:
    """Independent Philox stream keyed by (seed, stream_id).

    Owned by one trajectory; identical keys give bit-identical draws.
    """

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.rng = np.random.Generator(np.random.Philox(ss))

    def normals(self, shape):
        return self.rng.standard_normal(shape)

    def uniforms(self, shape):
        return self.rng.random(shape)

    def __repr__(self):
        return f"NoiseStream(seed={self.seed}, stream_id={self.stream_id})"


@dataclass(frozen=True)
class JumpEvent:
    time: float
    channel: int
    rate: float
    magnitude: float


def sample_complex_wiener(stream, dt, size=None):
    """Complex Wiener increment(s) with M(dξ)=0, M(dξ²)=0, M(|dξ|²)=dt."""
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    g = stream.normals(shape + (2,))
    z = (g[..., 0] + 1j * g[..., 1]) * np.sqrt(dt / 2)
    return complex(z) if size is None else z


def jump_magnitude(before, after):
    """Phase-insensitive distance min_θ ||after − e^{iθ} before|| between unit vectors."""
    ov = abs(np.vdot(before, after))
    return float(np.sqrt(max(0.0, 2.0 * (1.0 - ov))))


def _finish(new, t):
    nrm = float(np.linalg.norm(new))
    if not np.isfinite(nrm) or nrm == 0:
        raise NumericalBlowupError(t)
    return new / nrm, nrm


def _diffusive_drift(model, psi, t, dt):
    """Shared drift of QSD and the diffusive QJ limit; also returns L|ψ> and <L>."""
    inc = -1j * dt * (model.hamiltonian(t) @ psi)
    lpsis, ls = [], []
    for L, LdL in zip(model.lindblads, model.ldl):
        Lpsi = L @ psi
        l = np.vdot(psi, Lpsi)
        inc += -0.5 * dt * (LdL @ psi - 2 * np.conj(l) * Lpsi + abs(l) ** 2 * psi)
        lpsis.append(Lpsi)
        ls.append(l)
    return inc, lpsis, ls


def qsd_increment(model, psi, t, dt, dxi):
    """Un-normalized Euler–Maruyama increment of the QSD equation for given noise."""
    inc, lpsis, ls = _diffusive_drift(model, psi, t, dt)
    for Lpsi, l, x in zip(lpsis, ls, dxi):
        inc += (Lpsi - l * psi) * x
    return inc


def _qsd(model, psi, t, dt, stream):
    dxi = sample_complex_wiener(stream, dt, model.n_channels)
    inc = qsd_increment(model, psi, t, dt, dxi)
    if np.linalg.norm(inc) > 0.1:
        log.debug("qsd_step: increment norm %.3g at t=%g; dt may be too large", np.linalg.norm(inc), t)
    psi, nrm = _finish(psi + inc, t)
    return psi, nrm, []


def _qj_diffusive(model, psi, t, dt, stream):
    dW = stream.normals(model.n_channels) * np.sqrt(dt)
    inc, lpsis, ls = _diffusive_drift(model, psi, t, dt)
    for j, (Lpsi, l, w) in enumerate(zip(lpsis, ls, dW)):
        if abs(l) < PHASE_FLOOR:
            raise PhaseSingularityError(j, t)
        inc += (Lpsi - l * psi) * (np.conj(l) / abs(l)) * w
    psi, nrm = _finish(psi + inc, t)
    return psi, nrm, []


def _qj(model, psi, t, dt, stream):
    u = stream.uniforms(model.n_channels)
    inc = -1j * dt * (model.hamiltonian(t) @ psi)
    fired = []
    total = 0.0
    for j, (L, LdL) in enumerate(zip(model.lindblads, model.ldl)):
        Lpsi = L @ psi
        r = float(np.vdot(Lpsi, Lpsi).real)
        total += r
        inc += -0.5 * dt * (LdL @ psi - r * psi)
        if u[j] < r * dt:
            fired.append(j)
    if total * dt > 0.1:
        log.debug("qj_step: total jump probability %.3g per step at t=%g", total * dt, t)
    psi, nrm = _finish(psi + inc, t)
    if not fired:
        return psi, nrm, []
    if len(fired) > 1:
        log.debug("qj_step: channels %s fired together at t=%g; applying %d", fired, t, fired[0])
    j = fired[0]
    Lpsi = model.lindblads[j] @ psi
    rate = float(np.vdot(Lpsi, Lpsi).real)
    if rate < JUMP_RATE_FLOOR:
        raise DegenerateJumpError(j, t)
    after = Lpsi / np.sqrt(rate)
    event = JumpEvent(time=t + dt, channel=j, rate=rate, magnitude=jump_magnitude(psi, after))
    return after, nrm, [event]


def qsd_step(model, psi, t, dt, stream):
    """Euler–Maruyama QSD step with one complex Wiener increment per channel, renormalized."""
    return _qsd(model, psi, t, dt, stream)[0]


def qj_diffusive_step(model, psi, t, dt, stream):
    """Diffusive-limit QJ step: QSD drift, real noise times the phase <L†>/|<L>|.

    Raises :class:`PhaseSingularityError` when some <L_j> vanishes.
    """
    return _qj_diffusive(model, psi, t, dt, stream)[0]


def qj_step(model, psi, t, dt, stream):
    """One quantum-jump step: non-Hermitian drift, then at most one jump.

    Channel j fires when its uniform draw is below <L_j†L_j> dt (rates taken
    at the start of the step).  If several fire, the lowest index wins and the
    jump acts on the drifted state.  Returns (state, list of JumpEvent).
    """
    psi, _, events = _qj(model, psi, t, dt, stream)
    return psi, events


STEP_FUNCTIONS = {"qsd": _qsd, "qj": _qj, "qj_diffusive": _qj_diffusive}
