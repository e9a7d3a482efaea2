"""Truncated single-mode Fock space: ladder operators, coherent states, displacements.

States are 1-D complex128 arrays over |0>..|D-1>, operators dense (D, D) arrays.
"""
import logging
from math import ceil

import numpy as np
import scipy.linalg

from .errors import DegenerateStateError, DimensionError

log = logging.getLogger(__name__)

NORM_TOL = 1e-12


def _check_dim(dim):
    if int(dim) != dim or dim < 2:
        raise DimensionError(f"dimension must be an integer >= 2, got {dim!r}")
    return int(dim)


def make_annihilation(dim):
    """Annihilation operator with a[n-1, n] = sqrt(n)."""
    dim = _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def make_creation(dim):
    return make_annihilation(dim).conj().T


def number_operator(dim):
    dim = _check_dim(dim)
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def quadratures(dim):
    """Return (q, p) with q = (a + a†)/√2 and p = (a − a†)/(i√2)."""
    a = make_annihilation(dim)
    ad = a.conj().T
    return (a + ad) / np.sqrt(2.0), (a - ad) / (1j * np.sqrt(2.0))


def basis_state(n, dim):
    dim = _check_dim(dim)
    if not 0 <= n < dim:
        raise DimensionError(f"basis index {n} outside 0..{dim - 1}")
    psi = np.zeros(dim, dtype=complex)
    psi[n] = 1.0
    return psi


def normalize(psi):
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if not norm > 0:
        raise DegenerateStateError("cannot normalize a zero-norm state")
    return psi / norm


def expectation(op, psi):
    """<psi|op|psi> as a Python complex."""
    op = np.asarray(op)
    psi = np.asarray(psi)
    if op.ndim != 2 or op.shape[0] != op.shape[1] or op.shape[0] != psi.shape[0]:
        raise DimensionError(f"operator {op.shape} incompatible with state {psi.shape}")
    return complex(np.vdot(psi, op @ psi))


def tail_mass(psi, fraction=0.1):
    """Probability in the top ``fraction`` of the basis (at least one state)."""
    psi = np.asarray(psi)
    k = max(1, ceil(fraction * psi.shape[0]))
    return float(np.sum(np.abs(psi[-k:]) ** 2))


def coherent_state(alpha, dim):
    """|alpha> truncated to ``dim`` levels and renormalized."""
    dim = _check_dim(dim)
    alpha = complex(alpha)
    amp = np.empty(dim, dtype=complex)
    amp[0] = np.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, dim):
        amp[n] = amp[n - 1] * alpha / np.sqrt(n)
    lost = 1.0 - float(np.sum(np.abs(amp) ** 2))
    if lost > 1e-8:
        log.warning("coherent_state(%s, dim=%d): truncated tail mass %.3g", alpha, dim, lost)
    return amp / np.linalg.norm(amp)


def displacement_operator(alpha, dim):
    """D(alpha) = exp(alpha a† − alpha* a) via Padé scaling-and-squaring."""
    a = make_annihilation(dim)
    alpha = complex(alpha)
    gen = alpha * a.conj().T - np.conj(alpha) * a
    return scipy.linalg.expm(gen)


def random_state(dim, rng):
    """Haar-random pure state drawn from ``rng`` (a numpy Generator)."""
    dim = _check_dim(dim)
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)
