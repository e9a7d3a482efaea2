"""Trajectory and ensemble execution, jump statistics, Poincaré sections."""
from __future__ import annotations

import logging
import os
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import (DegenerateJumpError, FrameTruncationError, InvalidWindowError,
                     NumericalBlowupError, PhaseSingularityError, TrajectoryFailure,
                     UndersampledError)
from .fock import tail_mass
from .master import evolve_master, pure_density, trace_distance
from .unravelings import STEP_FUNCTIONS, STEPPERS, JumpEvent, NoiseStream

log = logging.getLogger(__name__)

CHUNK = 4096
WORKERS_ENV = "QTRAJ_WORKERS"


def worker_count():
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    mean_a: np.ndarray
    n_mean: np.ndarray
    delta_alpha_sq: np.ndarray
    norm_drift: np.ndarray
    tail_mass: np.ndarray
    jump_times: np.ndarray
    jump_channels: np.ndarray
    jump_rates: np.ndarray
    jump_magnitudes: np.ndarray
    stepper: str
    seed: int
    stream_id: int
    fingerprint: str
    final_state: np.ndarray
    frame_center: complex = 0j
    checkpoint_states: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def jumps(self):
        return [JumpEvent(float(t), int(c), float(r), float(m)) for t, c, r, m in
                zip(self.jump_times, self.jump_channels, self.jump_rates, self.jump_magnitudes)]

    @property
    def q(self):
        return np.sqrt(2.0) * self.mean_a.real

    @property
    def p(self):
        return np.sqrt(2.0) * self.mean_a.imag


class _Arrays:
    """Kernel-side arrays for a PolyForm at one truncation dimension."""

    def __init__(self, poly, dim, drive_frequency, drive_phase):
        k = max(2, poly.h_static.shape[0])
        lin = np.asarray(poly.lindblad_lin).reshape(-1, 3)
        if np.any((lin[:, 0] != 0) & (lin[:, 1] != 0)):
            k = max(k, 3)  # L†L then contains a² and a†²
        self.hs = np.zeros((k, k), complex)
        self.hd = np.zeros((k, k), complex)
        n0 = poly.h_static.shape[0]
        self.hs[:n0, :n0] = poly.h_static
        self.hd[:n0, :n0] = poly.h_drive
        self.lin = np.ascontiguousarray(poly.lindblad_lin, dtype=complex).reshape(-1, 3)
        self.W = K.monomial_weights(k, dim)
        self.BIN = K.binomials(k)
        self.sq = np.sqrt(np.arange(dim, dtype=float))
        self.drv = np.array([drive_frequency, drive_phase], dtype=float)
        self.dim = dim


_ARRAY_CACHE = weakref.WeakKeyDictionary()


def kernel_arrays(model, dim=None):
    dim = model.dim if dim is None else dim
    per_model = _ARRAY_CACHE.setdefault(model, {})
    if dim not in per_model:
        per_model[dim] = _Arrays(model.poly, dim, model.drive_frequency, model.drive_phase)
    return per_model[dim]


def _raise_status(status, dt, alpha_info=""):
    code, step, channel = int(status[0]), int(status[1]), int(status[2])
    t = step * dt
    if code == K.BLOWUP:
        raise NumericalBlowupError(t)
    if code == K.DEGENERATE_JUMP:
        raise DegenerateJumpError(channel, t)
    if code == K.PHASE_SINGULAR:
        raise PhaseSingularityError(channel, t)
    if code == K.FRAME_TRUNCATION:
        raise FrameTruncationError(float("nan"), t)
    raise RuntimeError(f"unknown kernel status {code}")


def _draw(stream, stepper, m, nch):
    if stepper == "qsd":
        return stream.normals((m, nch, 2))
    if stepper == "qj_diffusive":
        return stream.normals((m, nch))[..., None]
    return stream.uniforms((m, nch))[..., None]


_KIND = {"qsd": 0, "qj_diffusive": 1, "qj": 2}
SCHEMES = {"em": K.EM, "cayley": K.CAYLEY}


def integrate(model, psi0, stepper, dt, n_steps, stream, sample_every=1, checkpoint_steps=(),
              frame=False, alpha0=0j, frame_dim=None, threshold=0.1, tail_limit=1e-6,
              backend="auto", scheme="em"):
    """Run ``n_steps`` steps of ``stepper`` and return a TrajectoryRecord.

    ``backend`` is "kernel" (compiled loops, needs a polynomial model),
    "dense" (the reference single-step functions) or "auto".  ``scheme`` is
    "em" (Euler–Maruyama) or "cayley" (kernel backend only: the drift,
    linearized with <L> frozen over the step, by the Cayley transform, noise
    and jumps as in Euler–Maruyama).  The latter never amplifies any component
    of the state, so it stays stable for stiff Hamiltonians such as the
    quartic Duffing term at large photon numbers.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {tuple(SCHEMES)}")
    if stepper not in STEPPERS:
        raise ValueError(f"unknown stepper {stepper!r}; expected one of {STEPPERS}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    if backend == "auto":
        backend = "kernel" if model.poly is not None else "dense"
    if backend == "kernel" and model.poly is None:
        raise ValueError("kernel backend needs a model built from normal-ordered polynomials")
    if (frame or scheme != "em") and backend != "kernel":
        raise ValueError("moving-frame propagation and the cayley scheme need the kernel backend")
    dim = frame_dim if frame else model.dim
    psi = np.array(psi0, dtype=complex)
    if psi.shape != (dim,):
        raise ValueError(f"initial state has shape {psi.shape}, expected ({dim},)")
    n_samp = n_steps // sample_every + 1
    s_mean = np.zeros(n_samp, complex)
    s_n = np.zeros(n_samp)
    s_dasq = np.zeros(n_samp)
    s_drift = np.zeros(n_samp)
    s_tail = np.zeros(n_samp)
    cp_steps = np.asarray(checkpoint_steps, dtype=np.int64).reshape(-1)
    cp_out = np.zeros((cp_steps.size, dim), complex)
    tail_k = max(1, int(np.ceil(0.1 * dim)))
    ctr = np.array([alpha0], dtype=complex)
    sq = np.sqrt(np.arange(dim, dtype=float))

    s_mean[0], s_n[0], s_dasq[0] = K.observables(psi, ctr[0], sq)
    s_tail[0] = tail_mass(psi)
    cp_out[cp_steps == 0] = psi
    jumps = ([], [], [], [])
    diag = {"multi_fire": 0, "recenterings": 0}
    nch = model.n_channels

    if backend == "kernel":
        arr = kernel_arrays(model, dim)
        status = np.zeros(5, dtype=np.int64)
        for step0 in range(0, n_steps, CHUNK):
            m = min(CHUNK, n_steps - step0)
            noise = _draw(stream, stepper, m, nch)
            bufs = (np.empty(m), np.empty(m, np.int64), np.empty(m), np.empty(m))
            nj = K._run_chunk(_KIND[stepper], SCHEMES[scheme], psi, ctr, arr.hs, arr.hd, arr.drv, arr.lin,
                              arr.W, arr.BIN, arr.sq, dt, step0, m, frame, threshold, tail_k, tail_limit,
                              noise, sample_every, s_mean, s_n, s_dasq, s_drift, s_tail, cp_steps, cp_out,
                              status, *bufs)
            if nj:
                for lst, b in zip(jumps, bufs):
                    lst.append(b[:nj].copy())
            if status[0] != K.OK:
                if status[0] == K.FRAME_TRUNCATION:
                    raise FrameTruncationError(tail_mass(psi), int(status[1]) * dt)
                _raise_status(status, dt)
        diag["multi_fire"] = int(status[3])
        diag["recenterings"] = int(status[4])
    else:
        step = STEP_FUNCTIONS[stepper]
        for s in range(n_steps):
            psi, nrm, events = step(model, psi, s * dt, dt, stream)
            for ev in events:
                for lst, v in zip(jumps, (ev.time, ev.channel, ev.rate, ev.magnitude)):
                    lst.append(np.array([v]))
            s1 = s + 1
            if s1 % sample_every == 0:
                idx = s1 // sample_every
                s_mean[idx], s_n[idx], s_dasq[idx] = K.observables(psi, 0j, sq)
                s_drift[idx] = abs(nrm - 1.0)
                s_tail[idx] = tail_mass(psi)
            cp_out[cp_steps == s1] = psi

    times = np.arange(n_samp) * (sample_every * dt)
    if n_steps % sample_every:
        mean, n, dasq = K.observables(psi, ctr[0], sq)
        times = np.append(times, n_steps * dt)
        s_mean = np.append(s_mean, mean)
        s_n = np.append(s_n, n)
        s_dasq = np.append(s_dasq, dasq)
        s_drift = np.append(s_drift, np.nan)
        s_tail = np.append(s_tail, tail_mass(psi))

    def cat(lst, dtype):
        return np.concatenate(lst).astype(dtype) if lst else np.zeros(0, dtype)

    return TrajectoryRecord(
        times=times, mean_a=s_mean, n_mean=s_n, delta_alpha_sq=s_dasq, norm_drift=s_drift,
        tail_mass=s_tail, jump_times=cat(jumps[0], float), jump_channels=cat(jumps[1], np.int64),
        jump_rates=cat(jumps[2], float), jump_magnitudes=cat(jumps[3], float), stepper=stepper,
        seed=stream.seed, stream_id=stream.stream_id, fingerprint=model.fingerprint(),
        final_state=psi, frame_center=complex(ctr[0]),
        checkpoint_states=cp_out if cp_steps.size else None, diagnostics=diag,
    )


def _n_steps(t_final, dt):
    n = int(round(t_final / dt))
    if abs(n * dt - t_final) > 1e-9 * max(1.0, t_final):
        log.warning("t_final=%g is not a multiple of dt=%g; running %d steps", t_final, dt, n)
    return n


def run_trajectory(model, psi0, stepper, dt, t_final, sample_every=1, seed=0, stream_id=0,
                   checkpoints=(), backend="auto", scheme="em"):
    """Integrate one trajectory on stream (seed, stream_id)."""
    steps = [int(round(t / dt)) for t in checkpoints]
    return integrate(model, psi0, stepper, dt, _n_steps(t_final, dt), NoiseStream(seed, stream_id),
                     sample_every=sample_every, checkpoint_steps=steps, backend=backend, scheme=scheme)


@dataclass
class EnsembleSummary:
    n_traj: int
    checkpoints: np.ndarray
    rho: np.ndarray
    master_rho: np.ndarray | None
    trace_distance: np.ndarray | None
    jump_rate: np.ndarray
    jump_magnitude: np.ndarray
    records: list | None = None


def average_projectors(states, group=None):
    """Mean of |ψ><ψ| over ``states`` (n, D); summed in order, optionally in groups."""
    states = np.asarray(states)
    n = states.shape[0]
    group = n if group is None else group
    total = np.zeros((states.shape[1],) * 2, complex)
    for i in range(0, n, group):
        chunk = states[i:i + group]
        total += np.einsum("ni,nj->ij", chunk, chunk.conj())
    return total / n


def map_trajectories(fn, n_traj, workers=None):
    """[fn(i) for i in range(n_traj)] on a thread pool; results come back in stream order."""
    workers = worker_count() if workers is None else workers
    if workers > 1 and n_traj > 1:
        with ThreadPoolExecutor(min(workers, n_traj)) as pool:
            return list(pool.map(fn, range(n_traj)))
    return [fn(i) for i in range(n_traj)]


def run_ensemble(model, psi0, stepper, dt, t_final, checkpoints, n_traj, seed, master_dt=None,
                 workers=None, keep_records=False, backend="auto", scheme="em", sample_every=None):
    """Average n_traj trajectories on streams (seed, 0..n_traj-1) and compare with the master equation.

    Projector sums are reduced in stream-id order, so results do not depend
    on the number of workers.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    checkpoints = np.asarray(checkpoints, dtype=float)
    n_steps = _n_steps(t_final, dt)
    cp_steps = [int(round(t / dt)) for t in checkpoints]
    every = max(1, n_steps) if sample_every is None else sample_every

    def one(i):
        stream = NoiseStream(seed, i)
        try:
            return integrate(model, psi0, stepper, dt, n_steps, stream, sample_every=every,
                             checkpoint_steps=cp_steps, backend=backend, scheme=scheme)
        except Exception as exc:
            raise TrajectoryFailure(i, getattr(exc, "t", None), exc) from exc

    records = map_trajectories(one, n_traj, workers)

    D = model.dim
    rho = np.zeros((len(cp_steps), D, D), complex)
    for rec in records:
        for c in range(len(cp_steps)):
            v = rec.checkpoint_states[c]
            rho[c] += np.outer(v, v.conj())
    rho /= n_traj

    master_rho = tds = None
    if checkpoints.size:
        mdt = dt if master_dt is None else master_dt
        res = evolve_master(model, pure_density(psi0), mdt, t_final)
        master_rho = np.array([res.at(t) for t in checkpoints])
        tds = np.array([trace_distance(r, m) for r, m in zip(rho, master_rho)])

    span = n_steps * dt
    rate, mag = jump_statistics(records, (0.0, span), model.n_channels) if span > 0 else (
        np.zeros(model.n_channels), np.full(model.n_channels, np.nan))
    return EnsembleSummary(n_traj=n_traj, checkpoints=checkpoints, rho=rho, master_rho=master_rho,
                           trace_distance=tds, jump_rate=rate, jump_magnitude=mag,
                           records=records if keep_records else None)


def jump_statistics(records, window, n_channels=None):
    """Per-channel jump rate (jumps per trajectory per unit time) and mean magnitude in ``window``."""
    t0, t1 = window
    if not t1 > t0:
        raise InvalidWindowError(f"empty window ({t0}, {t1})")
    if not records:
        raise ValueError("no records")
    if n_channels is None:
        n_channels = 1 + max((int(r.jump_channels.max()) for r in records if r.jump_channels.size), default=0)
    counts = np.zeros(n_channels)
    mags = np.zeros(n_channels)
    for r in records:
        sel = (r.jump_times > t0) & (r.jump_times <= t1)
        ch = r.jump_channels[sel]
        counts += np.bincount(ch, minlength=n_channels)[:n_channels]
        mags += np.bincount(ch, weights=r.jump_magnitudes[sel], minlength=n_channels)[:n_channels]
    rate = counts / (len(records) * (t1 - t0))
    with np.errstate(invalid="ignore", divide="ignore"):
        magnitude = np.where(counts > 0, mags / np.maximum(counts, 1), np.nan)
    return rate, magnitude


def strobe(times, q, p, period, t_skip=0.0):
    """Linearly interpolate (q, p) at t_skip + k·period within the sampled span."""
    times = np.asarray(times, dtype=float)
    if period <= 0:
        raise ValueError("period must be positive")
    if times.size < 2:
        return np.zeros((0, 2))
    interval = float(np.max(np.diff(times)))
    if period < 2 * interval:
        raise UndersampledError(f"period {period} shorter than twice the sampling interval {interval}")
    k_max = int(np.floor((times[-1] - t_skip) / period + 1e-9))
    if k_max < 0:
        return np.zeros((0, 2))
    ts = t_skip + period * np.arange(k_max + 1)
    ts = ts[ts >= times[0]]
    return np.column_stack([np.interp(ts, times, q), np.interp(ts, times, p)])


def poincare_points(record, period, t_skip=0.0, scale=1.0):
    """Strobed (q, p) = √2 (Re<a>, Im<a>) / scale, one point per ``period`` after ``t_skip``."""
    return strobe(record.times, record.q / scale, record.p / scale, period, t_skip)
