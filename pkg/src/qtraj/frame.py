"""Displaced-frame representation: localization width and moving-basis runs."""
from dataclasses import dataclass

import numpy as np

from .ensemble import integrate
from .errors import FrameTruncationError
from .fock import displacement_operator, make_annihilation, normalize, tail_mass
from .unravelings import NoiseStream

FRAME_TAIL_LIMIT = 1e-6


@dataclass(frozen=True)
class DisplacedState:
    alpha: complex
    phi: np.ndarray


def _moments(psi):
    psi = np.asarray(psi)
    n = np.arange(psi.shape[0])
    mean = complex(np.vdot(psi[:-1], np.sqrt(n[1:]) * psi[1:]))
    occ = float(np.dot(n, np.abs(psi) ** 2))
    return mean, occ


def delta_alpha_sq(psi):
    """Δα² = <a†a> − |<a>|², zero exactly for coherent states."""
    mean, occ = _moments(psi)
    return occ - abs(mean) ** 2


def to_displaced_frame(psi):
    """Split psi into its centre alpha = <a> and phi = D(−alpha)|psi>."""
    psi = np.asarray(psi, dtype=complex)
    alpha = complex(np.vdot(psi, make_annihilation(psi.shape[0]) @ psi))
    phi = normalize(displacement_operator(-alpha, psi.shape[0]) @ psi)
    tail = tail_mass(phi)
    if tail > FRAME_TAIL_LIMIT:
        raise FrameTruncationError(tail)
    return DisplacedState(alpha=alpha, phi=phi)


def from_displaced_frame(ds):
    phi = np.asarray(ds.phi, dtype=complex)
    if ds.alpha == 0:
        return normalize(phi)
    psi = normalize(displacement_operator(ds.alpha, phi.shape[0]) @ phi)
    tail = tail_mass(psi)
    if tail > FRAME_TAIL_LIMIT:
        raise FrameTruncationError(tail)
    return psi


def moving_frame_run(model, psi0, stepper, dt, t_final, recenter_threshold=0.1, stream=None,
                     frame_dim=20, sample_every=1, seed=0, stream_id=0, scheme="em"):
    """Propagate in a small displaced frame whose centre follows the mean-field drift.

    The frame is re-centred with an exact displacement whenever |<a>_phi|
    exceeds ``recenter_threshold``.  Samples in the returned record are
    lab-frame observables.
    """
    if model.poly is None:
        raise ValueError("moving-frame propagation needs a model built from normal-ordered polynomials")
    stream = NoiseStream(seed, stream_id) if stream is None else stream
    ds = to_displaced_frame(psi0)
    phi = ds.phi
    if phi.shape[0] > frame_dim:
        lost = float(np.sum(np.abs(phi[frame_dim:]) ** 2))
        if lost > FRAME_TAIL_LIMIT:
            raise FrameTruncationError(lost)
        phi = normalize(phi[:frame_dim])
    elif phi.shape[0] < frame_dim:
        phi = np.concatenate([phi, np.zeros(frame_dim - phi.shape[0], complex)])
    n_steps = int(round(t_final / dt))
    return integrate(model, phi, stepper, dt, n_steps, stream, sample_every=sample_every, frame=True,
                     alpha0=ds.alpha, frame_dim=frame_dim, threshold=recenter_threshold,
                     tail_limit=FRAME_TAIL_LIMIT, backend="kernel", scheme=scheme)
