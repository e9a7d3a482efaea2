"""Model description shared by the master-equation oracle and the unravelings."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .poly import NormalPoly


@dataclass(frozen=True, eq=False)
class PolyForm:
    """Kernel-ready normal-ordered coefficients.

    ``h_static[m, n]`` and ``h_drive[m, n]`` multiply a†^m a^n; each row of
    ``lindblad_lin`` holds (u, v, w) for L = u a + v a† + w.
    """

    h_static: np.ndarray
    h_drive: np.ndarray
    lindblad_lin: np.ndarray

    def hamiltonian_coeffs(self, t, drive_frequency, drive_phase):
        return self.h_static + np.cos(drive_frequency * t + drive_phase) * self.h_drive

    def classical_drift(self, alpha, t, drive_frequency=0.0, drive_phase=0.0):
        """d<a>/dt evaluated on the coherent state |alpha> (mean-field drift)."""
        c = self.hamiltonian_coeffs(t, drive_frequency, drive_phase)
        ac = np.conj(alpha)
        dh = 0j
        K = c.shape[0]
        for m in range(1, K):
            for n in range(K):
                if c[m, n] != 0:
                    dh += m * c[m, n] * ac ** (m - 1) * alpha**n
        out = -1j * dh
        for u, v, w in self.lindblad_lin:
            out += 0.5 * (abs(v) ** 2 - abs(u) ** 2) * alpha + 0.5 * (v * np.conj(w) - np.conj(u) * w)
        return out


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """H(t) = h_static + cos(drive_frequency·t + drive_phase)·h_drive, plus Lindblad operators (ħ = 1)."""

    h_static: np.ndarray
    lindblads: tuple = ()
    h_drive: np.ndarray | None = None
    drive_frequency: float = 0.0
    drive_phase: float = 0.0
    poly: PolyForm | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)
    ldl: tuple = field(init=False, repr=False)

    def __post_init__(self):
        h = np.asarray(self.h_static, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise DimensionError(f"Hamiltonian must be square, got {h.shape}")
        dim = h.shape[0]
        ls = tuple(np.asarray(L, dtype=complex) for L in self.lindblads)
        for L in ls:
            if L.shape != (dim, dim):
                raise DimensionError(f"Lindblad operator {L.shape} does not match dim {dim}")
        hd = None
        if self.h_drive is not None:
            hd = np.asarray(self.h_drive, dtype=complex)
            if hd.shape != (dim, dim):
                raise DimensionError(f"drive operator {hd.shape} does not match dim {dim}")
        object.__setattr__(self, "h_static", h)
        object.__setattr__(self, "lindblads", ls)
        object.__setattr__(self, "h_drive", hd)
        object.__setattr__(self, "ldl", tuple(L.conj().T @ L for L in ls))

    @classmethod
    def from_poly(cls, dim, hamiltonian, lindblads=(), h_drive=None, drive_frequency=0.0,
                  drive_phase=0.0, name="custom", params=None):
        """Build dense operators from normal-ordered polynomials.

        Zero Lindblad polynomials are dropped.  The kernel form is attached
        only when every Lindblad operator is linear in a and a†.
        """
        lindblads = [L for L in lindblads if L.terms]
        h_drive = h_drive if h_drive is not None and h_drive.terms else None
        polys = [hamiltonian, *lindblads] + ([h_drive] if h_drive is not None else [])
        K = max(P.degree for P in polys) + 1
        poly = None
        if all(L.degree <= 1 for L in lindblads):
            lin = np.array([L.linear_coeffs() for L in lindblads], dtype=complex).reshape(-1, 3)
            poly = PolyForm(
                h_static=hamiltonian.coeff_array(K),
                h_drive=(h_drive or NormalPoly()).coeff_array(K),
                lindblad_lin=lin,
            )
        return cls(
            h_static=hamiltonian.to_matrix(dim),
            lindblads=tuple(L.to_matrix(dim) for L in lindblads),
            h_drive=None if h_drive is None else h_drive.to_matrix(dim),
            drive_frequency=float(drive_frequency),
            drive_phase=float(drive_phase),
            poly=poly,
            name=name,
            params=dict(params or {}),
        )

    @property
    def dim(self):
        return self.h_static.shape[0]

    @property
    def n_channels(self):
        return len(self.lindblads)

    @property
    def time_dependent(self):
        return self.h_drive is not None

    def drive(self, t):
        return np.cos(self.drive_frequency * t + self.drive_phase)

    def hamiltonian(self, t=0.0):
        if self.h_drive is None:
            return self.h_static
        return self.h_static + self.drive(t) * self.h_drive

    def fingerprint(self):
        h = hashlib.sha256()
        h.update(self.name.encode())
        h.update(json.dumps(self.params, sort_keys=True, default=str).encode())
        h.update(str(self.dim).encode())
        if not self.params:
            for arr in (self.h_static, *self.lindblads):
                h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()[:16]
