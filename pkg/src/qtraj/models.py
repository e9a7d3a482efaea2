"""Model builders: damped (optionally forced, thermal) oscillator and the
driven damped Duffing oscillator, with their classical reference dynamics."""
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels as K
from .poly import NormalPoly
from .system import ModelSpec
from .unravelings import sample_complex_wiener


@dataclass(frozen=True)
class HOParams:
    omega: float = 1.0
    gamma: float = 1.0
    nbar: float = 0.0
    force: float = 0.0
    dim: int = 30

    def __post_init__(self):
        if self.gamma < 0 or self.nbar < 0 or self.dim < 2:
            raise ValueError(f"invalid oscillator parameters {self}")


@dataclass(frozen=True)
class DuffingParams:
    beta: float = 1.0
    damping: float = 0.125
    drive_amplitude: float = 0.3
    drive_frequency: float = 1.0
    dim: int = 40

    def __post_init__(self):
        if self.beta <= 0 or self.damping < 0 or self.dim < 2:
            raise ValueError(f"invalid Duffing parameters {self}")


def damped_ho(params):
    """H = ω a†a + F (a + a†)/√2, L1 = √(n̄γ) a†, L2 = √((n̄+1)γ) a.

    L1 is omitted when n̄γ = 0.
    """
    a, ad = NormalPoly.a(), NormalPoly.adag()
    H = params.omega * (ad * a) + (params.force / np.sqrt(2.0)) * (a + ad)
    L1 = np.sqrt(params.nbar * params.gamma) * ad
    L2 = np.sqrt((params.nbar + 1) * params.gamma) * a
    return ModelSpec.from_poly(params.dim, H, [L1, L2], name="damped_ho", params=asdict(params))


def ho_equilibrium(params):
    """Fixed point of the mean-field drift: (−iω − γ/2) α − i F/√2 = 0."""
    return complex(-1j * params.force / np.sqrt(2.0) / (1j * params.omega + params.gamma / 2))


def ho_steady_occupation(params):
    """Stationary <a†a> = n̄ + |α_eq|²."""
    return params.nbar + abs(ho_equilibrium(params)) ** 2


def classical_alpha_evolve(params, alpha0, dt, t_final, stream):
    """Euler–Maruyama for dα = (−iω − γ/2) α dt − i F/√2 dt + √(n̄γ) dξ.

    Returns (times, alpha).
    """
    n = int(round(t_final / dt))
    lam = -1j * params.omega - params.gamma / 2
    kicks = np.sqrt(params.nbar * params.gamma) * sample_complex_wiener(stream, dt, n) if params.nbar > 0 \
        else np.zeros(n, complex)
    alpha = K.linear_recurrence(complex(alpha0), 1 + lam * dt, -1j * params.force / np.sqrt(2.0) * dt,
                                np.ascontiguousarray(kicks, dtype=complex))
    return np.arange(n + 1) * dt, alpha


def duffing(params):
    """Driven damped double well, scaled so that β → ∞ is the classical limit at ħ = 1.

    H(t) = p²/2 + q⁴/(4β²) − q²/2 + (Γ/2)(qp + pq) − gβ q cos(Ωt),  L = √(2Γ) a.
    In Q = q/β, P = p/β the mean-field motion is the β-independent Duffing
    equation Q'' + 2Γ Q' − Q + Q³ = g cos(Ωt).
    """
    b = params.beta
    G = params.damping
    q, p = NormalPoly.q(), NormalPoly.p()
    H = 0.5 * (p * p) + (1 / (4 * b * b)) * q**4 - 0.5 * (q * q) + (G / 2) * (q * p + p * q)
    drive = (-params.drive_amplitude * b) * q
    L = np.sqrt(2 * G) * NormalPoly.a()
    return ModelSpec.from_poly(params.dim, H, [L], h_drive=drive, drive_frequency=params.drive_frequency,
                               name="duffing", params=asdict(params))


def duffing_energy(params, q, p):
    """Undriven classical energy p²/2 − q²/2 + q⁴/(4β²)."""
    q = np.asarray(q)
    return 0.5 * np.asarray(p) ** 2 - 0.5 * q**2 + q**4 / (4 * params.beta**2)


def classical_duffing_evolve(params, q0, p0, dt, t_final):
    """RK4 for q' = p, p' = q − q³/β² − 2Γp + gβ cos(Ωt); returns (times, q, p)."""
    n = int(round(t_final / dt))
    q, p = K.duffing_rk4(float(q0), float(p0), float(dt), n, float(params.beta), float(params.damping),
                         float(params.drive_amplitude), float(params.drive_frequency))
    return np.arange(n + 1) * dt, q, p
