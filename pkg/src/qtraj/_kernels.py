"""Compiled trajectory loops.

Operators arrive in normal-ordered form: ``c[m, n]`` multiplies a†^m a^n and
each Lindblad row is (u, v, w) for u a + v a† + w.  ``W[m, n, j]`` is the
matrix element <j-n+m| a†^m a^n |j>.  With ``frame`` set, the state lives in a
displaced frame centred at ``ctr[0]`` that follows the mean-field drift.

Status codes written to ``status[0]``: 0 ok, 1 non-finite state, 2 degenerate
jump, 3 diffusive phase singularity, 4 frame truncation.  ``status[1]`` holds
the failing step, ``status[2]`` the channel, ``status[3]`` the multi-fire
count, ``status[4]`` the number of re-centerings.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, jit

OK, BLOWUP, DEGENERATE_JUMP, PHASE_SINGULAR, FRAME_TRUNCATION = range(5)
EM, CAYLEY = range(2)


if USE_NUMBA:

    @jit
    def _apply_poly(c, W, x, out):
        D = x.shape[0]
        K = c.shape[0]
        out[:] = 0
        for m in range(K):
            for n in range(K):
                cmn = c[m, n]
                if cmn != 0:
                    hi = min(D, D - m + n)
                    for j in range(n, hi):
                        out[j - n + m] += cmn * W[m, n, j] * x[j]

    @jit
    def _apply_lin(u, v, w, sq, x, out):
        D = x.shape[0]
        for i in range(D):
            out[i] = w * x[i]
        for i in range(1, D):
            out[i - 1] += u * sq[i] * x[i]
            out[i] += v * sq[i] * x[i - 1]

    @jit
    def _vdot(x, y):
        acc = 0j
        for i in range(x.shape[0]):
            acc += x[i].conjugate() * y[i]
        return acc

    @jit
    def _norm2(x):
        acc = 0.0
        for i in range(x.shape[0]):
            acc += x[i].real * x[i].real + x[i].imag * x[i].imag
        return acc

    @jit
    def _mean_a(x, sq):
        acc = 0j
        for i in range(1, x.shape[0]):
            acc += x[i - 1].conjugate() * sq[i] * x[i]
        return acc

    @jit
    def _mean_n(x):
        acc = 0.0
        for i in range(x.shape[0]):
            acc += i * (x[i].real * x[i].real + x[i].imag * x[i].imag)
        return acc

else:

    def _apply_poly(c, W, x, out):
        D = x.shape[0]
        out[:] = 0
        for m, n in zip(*np.nonzero(c)):
            hi = min(D, D - m + n)
            if hi > n:
                out[m:hi - n + m] += c[m, n] * W[m, n, n:hi] * x[n:hi]

    def _apply_lin(u, v, w, sq, x, out):
        out[:] = w * x
        out[:-1] += u * sq[1:] * x[1:]
        out[1:] += v * sq[1:] * x[:-1]

    def _vdot(x, y):
        return complex(np.vdot(x, y))

    def _norm2(x):
        return float(np.vdot(x, x).real)

    def _mean_a(x, sq):
        return complex(np.vdot(x[:-1], sq[1:] * x[1:]))

    def _mean_n(x):
        return float(np.dot(np.arange(x.shape[0]), np.abs(x) ** 2))


if USE_NUMBA:

    @jit
    def _cayley(c, W, psi, h, hpsi, band, x, out):
        """out = (1 + i h H)^-1 (1 - i h H) psi for a banded, possibly non-Hermitian, H in monomial coefficients."""
        D = psi.shape[0]
        K = c.shape[0]
        bw = K - 1
        _apply_poly(c, W, psi, hpsi)
        for i in range(D):
            x[i] = psi[i] - 1j * h * hpsi[i]
        band[:, :] = 0
        for i in range(D):
            band[i, bw] = 1.0
        for m in range(K):
            for n in range(K):
                cmn = c[m, n]
                if cmn != 0:
                    for j in range(n, min(D, D - m + n)):
                        row = j - n + m
                        band[row, j - row + bw] += 1j * h * cmn * W[m, n, j]
        # the Hermitian part of I + ihH is >= I for the effective Hamiltonians used here,
        # so elimination without pivoting is stable
        for k in range(D):
            piv = band[k, bw]
            for i in range(k + 1, min(D, k + bw + 1)):
                f = band[i, k - i + bw] / piv
                if f != 0:
                    for j in range(k, min(D, k + bw + 1)):
                        band[i, j - i + bw] -= f * band[k, j - k + bw]
                    x[i] -= f * x[k]
        for i in range(D - 1, -1, -1):
            acc = x[i]
            for j in range(i + 1, min(D, i + bw + 1)):
                acc -= band[i, j - i + bw] * out[j]
            out[i] = acc / band[i, bw]

else:

    def _cayley(c, W, psi, h, hpsi, band, x, out):
        import scipy.linalg

        D = psi.shape[0]
        bw = c.shape[0] - 1
        _apply_poly(c, W, psi, hpsi)
        ab = np.zeros((2 * bw + 1, D), dtype=complex)
        ab[bw, :] = 1.0
        for m, n in zip(*np.nonzero(c)):
            hi = min(D, D - m + n)
            cols = np.arange(n, hi)
            rows = cols - n + m
            ab[bw + rows - cols, cols] += 1j * h * c[m, n] * W[m, n, n:hi]
        out[:] = scipy.linalg.solve_banded((bw, bw), ab, psi - 1j * h * hpsi)


@jit
def _displace(psi, beta, sq, tmp, term):
    """psi <- D(beta) psi by Taylor series of the generator, with scaling."""
    D = psi.shape[0]
    s = max(1, int(math.ceil(4.0 * abs(beta) * math.sqrt(D))))
    b = beta / s
    bc = np.conj(b)
    for _ in range(s):
        term[:] = psi
        for order in range(1, 60):
            tmp[:] = 0
            tmp[1:] += b * sq[1:] * term[:-1]
            tmp[:-1] -= bc * sq[1:] * term[1:]
            term[:] = tmp / order
            psi += term
            if _norm2(term) < 1e-34:
                break


@jit
def _frame_ops(hs, hd, drv, lin, t, alpha, frame, BIN, c, linf, vel, given):
    """Fill operator coefficients at time t for a frame centred at alpha.

    Returns the frame velocity: the mean-field drift at alpha, or ``vel`` when
    ``given`` is set (used for the midpoint Hamiltonian of the Cayley scheme).
    """
    K = hs.shape[0]
    cd = math.cos(drv[0] * t + drv[1])
    if not frame:
        for m in range(K):
            for n in range(K):
                c[m, n] = hs[m, n] + cd * hd[m, n]
        linf[:, :] = lin
        return 0j
    ac = np.conj(alpha)
    pa = np.empty(K, dtype=np.complex128)
    pc = np.empty(K, dtype=np.complex128)
    pa[0] = 1.0
    pc[0] = 1.0
    for i in range(1, K):
        pa[i] = pa[i - 1] * alpha
        pc[i] = pc[i - 1] * ac
    for k in range(K):
        for l in range(K):
            acc = 0j
            for m in range(k, K):
                for n in range(l, K):
                    b = hs[m, n] + cd * hd[m, n]
                    if b != 0:
                        acc += b * BIN[m, k] * BIN[n, l] * pc[m - k] * pa[n - l]
            c[k, l] = acc
    damp = 0j
    for j in range(lin.shape[0]):
        u = lin[j, 0]
        v = lin[j, 1]
        w = lin[j, 2]
        linf[j, 0] = u
        linf[j, 1] = v
        linf[j, 2] = w + u * alpha + v * ac
        damp += 0.5 * (abs(v) ** 2 - abs(u) ** 2) * alpha + 0.5 * (v * np.conj(w) - np.conj(u) * w)
    # frame motion adds i(vel* a - vel a†); constants are a global phase
    c[0, 0] = 0.0
    if given:
        c[1, 0] = c[1, 0] - 1j * vel
        out = vel
    else:
        out = -1j * c[1, 0] + damp
        c[1, 0] = -1j * damp  # mean-field linear terms cancel exactly
    c[0, 1] = np.conj(c[1, 0])
    return out


@jit
def observables(psi, alpha, sq):
    """Lab-frame (<a>, <a†a>, Δα²) of a state held in a frame centred at alpha."""
    b = _mean_a(psi, sq)
    n = _mean_n(psi)
    mean = alpha + b
    nlab = n + 2.0 * (np.conj(alpha) * b).real + abs(alpha) ** 2
    return mean, nlab, n - abs(b) ** 2


@jit
def _tail(psi, k):
    D = psi.shape[0]
    return _norm2(psi[D - k:])


@jit
def _drift(kind, psi, c, linf, W, sq, out, Lpsi, LdLpsi):
    """Deterministic part of the SDE (kind 2: quantum-jump no-jump drift)."""
    _apply_poly(c, W, psi, out)
    out *= -1j
    for j in range(linf.shape[0]):
        _apply_lin(linf[j, 0], linf[j, 1], linf[j, 2], sq, psi, Lpsi)
        _apply_lin(np.conj(linf[j, 1]), np.conj(linf[j, 0]), np.conj(linf[j, 2]), sq, Lpsi, LdLpsi)
        if kind == 2:
            r = _norm2(Lpsi)
            out += -0.5 * (LdLpsi - r * psi)
        else:
            l = _vdot(psi, Lpsi)
            out += -0.5 * (LdLpsi - (2.0 * np.conj(l)) * Lpsi + (abs(l) ** 2) * psi)


@jit
def _dissipator(kind, linf, ls, cd):
    """Coefficients of i·G, where G is the linear drift with each <L> frozen at ``ls``.

    G = Σ -(L†L - 2<L>* L + |<L>|²)/2 for the diffusive unravelings and
    Σ -L†L/2 for quantum jumps, whose norm-restoring term is a scalar that
    renormalization removes.  H + i·G is the effective Hamiltonian of the
    implicit step; its anti-Hermitian part is -(L-<L>)†(L-<L>)/2 summed, so
    the step never amplifies any component of the state.
    """
    cd[:, :] = 0
    for j in range(linf.shape[0]):
        u = linf[j, 0]
        v = linf[j, 1]
        w = linf[j, 2]
        # L†L = (|u|²+|v|²) a†a + ū v a†² + v̄ u a² + (ū w + w̄ v) a† + (v̄ w + w̄ u) a + |v|² + |w|²
        cd[1, 1] += abs(u) ** 2 + abs(v) ** 2
        if u != 0 and v != 0:
            cd[2, 0] += np.conj(u) * v
            cd[0, 2] += np.conj(v) * u
        cd[1, 0] += np.conj(u) * w + np.conj(w) * v
        cd[0, 1] += np.conj(v) * w + np.conj(w) * u
        cd[0, 0] += abs(v) ** 2 + abs(w) ** 2
        if kind != 2:
            lc = np.conj(ls[j])
            cd[0, 1] -= 2.0 * lc * u
            cd[1, 0] -= 2.0 * lc * v
            cd[0, 0] += abs(ls[j]) ** 2 - 2.0 * lc * w
    for m in range(cd.shape[0]):
        for n in range(cd.shape[1]):
            cd[m, n] *= -0.5j


@jit
def _run_chunk(kind, scheme, psi, ctr, hs, hd, drv, lin, W, BIN, sq, dt, step0, nsteps, frame,
               threshold, tail_k, tail_limit, noise, sample_every, s_mean, s_n, s_dasq, s_drift,
               s_tail, cp_steps, cp_out, status, jt, jch, jrate, jmag):
    """Advance ``psi`` by ``nsteps`` steps; returns the number of logged jumps.

    kind 0: QSD, noise (nsteps, nch, 2) standard normals.
    kind 1: diffusive QJ, noise (nsteps, nch, 1) standard normals.
    kind 2: QJ, noise (nsteps, nch, 1) uniforms.
    scheme EM: Euler–Maruyama.  CAYLEY: the whole drift, linearized with <L>
    frozen at the start of the step, by the Cayley (Crank–Nicolson) transform
    with H at the step midpoint.  Noise and jump decisions always use the
    state at the start of the step.
    """
    D = psi.shape[0]
    K = hs.shape[0]
    nch = lin.shape[0]
    c = np.empty((K, K), dtype=np.complex128)
    cd = np.empty((K, K), dtype=np.complex128)
    ls = np.zeros(nch, dtype=np.complex128)
    linf = np.empty((nch, 3), dtype=np.complex128)
    Lpsi = np.empty(D, dtype=np.complex128)
    LdLpsi = np.empty(D, dtype=np.complex128)
    k1 = np.empty(D, dtype=np.complex128)
    k2 = np.empty(D, dtype=np.complex128)
    k3 = np.empty(D, dtype=np.complex128)
    k4 = np.empty(D, dtype=np.complex128)
    nz = np.empty(D, dtype=np.complex128)
    tmp = np.empty(D, dtype=np.complex128)
    term = np.empty(D, dtype=np.complex128)
    band = np.empty((D, 2 * K - 1), dtype=np.complex128)
    sqh = math.sqrt(dt / 2.0)
    sqd = math.sqrt(dt)
    nj = 0
    for k in range(nsteps):
        s = step0 + k
        t = s * dt
        a0 = ctr[0]
        vel = _frame_ops(hs, hd, drv, lin, t, a0, frame, BIN, c, linf, 0j, False)
        nz[:] = 0
        fire = -1
        for j in range(nch):
            _apply_lin(linf[j, 0], linf[j, 1], linf[j, 2], sq, psi, Lpsi)
            if kind == 2:
                if noise[k, j, 0] < _norm2(Lpsi) * dt:
                    if fire < 0:
                        fire = j
                    else:
                        status[3] += 1
            else:
                l = _vdot(psi, Lpsi)
                ls[j] = l
                if kind == 0:
                    x = (noise[k, j, 0] + 1j * noise[k, j, 1]) * sqh
                else:
                    al = abs(l)
                    if al < 1e-12:
                        status[0] = PHASE_SINGULAR
                        status[1] = s
                        status[2] = j
                        return nj
                    x = (np.conj(l) / al) * (noise[k, j, 0] * sqd)
                nz += (Lpsi - l * psi) * x
        if scheme == CAYLEY:
            _dissipator(kind, linf, ls, cd)
            _frame_ops(hs, hd, drv, lin, t + 0.5 * dt, a0 + 0.5 * dt * vel, frame, BIN, c, linf, vel, True)
            c += cd
            _cayley(c, W, psi, 0.5 * dt, k2, band, k3, k4)
            psi[:] = k4 + nz
        else:
            _drift(kind, psi, c, linf, W, sq, k1, Lpsi, LdLpsi)
            psi += dt * k1 + nz
        nrm2 = _norm2(psi)
        if not math.isfinite(nrm2) or nrm2 == 0.0:
            status[0] = BLOWUP
            status[1] = s
            return nj
        nrm = math.sqrt(nrm2)
        psi /= nrm
        if fire >= 0:
            if frame:
                _frame_ops(hs, hd, drv, lin, t + dt, a0 + dt * vel, frame, BIN, c, linf, vel, True)
            _apply_lin(linf[fire, 0], linf[fire, 1], linf[fire, 2], sq, psi, Lpsi)
            rate = _norm2(Lpsi)
            if rate < 1e-14:
                status[0] = DEGENERATE_JUMP
                status[1] = s
                status[2] = fire
                return nj
            Lpsi /= math.sqrt(rate)
            jt[nj] = (s + 1) * dt
            jch[nj] = fire
            jrate[nj] = rate
            jmag[nj] = math.sqrt(max(0.0, 2.0 * (1.0 - abs(_vdot(psi, Lpsi)))))
            nj += 1
            psi[:] = Lpsi
        if frame:
            ctr[0] = a0 + vel * dt
            b = _mean_a(psi, sq)
            if abs(b) > threshold:
                _displace(psi, -b, sq, tmp, term)
                psi /= math.sqrt(_norm2(psi))
                ctr[0] += b
                status[4] += 1
        tail = _tail(psi, tail_k)
        s1 = s + 1
        if frame and tail > tail_limit:
            status[0] = FRAME_TRUNCATION
            status[1] = s1
            return nj
        if s1 % sample_every == 0:
            idx = s1 // sample_every
            mean, n, dasq = observables(psi, ctr[0], sq)
            s_mean[idx] = mean
            s_n[idx] = n
            s_dasq[idx] = dasq
            s_drift[idx] = abs(nrm - 1.0)
            s_tail[idx] = tail
        for i in range(cp_steps.shape[0]):
            if cp_steps[i] == s1:
                cp_out[i, :] = psi
    return nj


def monomial_weights(K, D):
    """W[m, n, j] = <j-n+m| a†^m a^n |j> in the truncated basis (0 when out of range)."""
    from math import lgamma

    W = np.zeros((K, K, D))
    for m in range(K):
        for n in range(K):
            for j in range(n, min(D, D - m + n)):
                i = j - n
                W[m, n, j] = math.exp(0.5 * (lgamma(j + 1) - lgamma(i + 1)) + 0.5 * (lgamma(i + m + 1) - lgamma(i + 1)))
    return W


def binomials(K):
    from math import comb

    return np.array([[comb(m, k) for k in range(K)] for m in range(K)], dtype=float)


@jit
def linear_recurrence(x0, factor, const, kicks):
    """x[n+1] = factor·x[n] + const + kicks[n]; returns x[0..N]."""
    out = np.empty(kicks.shape[0] + 1, dtype=np.complex128)
    out[0] = x0
    for i in range(kicks.shape[0]):
        out[i + 1] = factor * out[i] + const + kicks[i]
    return out


@jit
def _duffing_rhs(t, q, p, beta, gamma, g, omega):
    return p, q - q * q * q / (beta * beta) - 2.0 * gamma * p + g * beta * math.cos(omega * t)


@jit
def duffing_rk4(q0, p0, dt, n_steps, beta, gamma, g, omega):
    q = np.empty(n_steps + 1)
    p = np.empty(n_steps + 1)
    q[0] = q0
    p[0] = p0
    for i in range(n_steps):
        t = i * dt
        a1, b1 = _duffing_rhs(t, q[i], p[i], beta, gamma, g, omega)
        a2, b2 = _duffing_rhs(t + 0.5 * dt, q[i] + 0.5 * dt * a1, p[i] + 0.5 * dt * b1, beta, gamma, g, omega)
        a3, b3 = _duffing_rhs(t + 0.5 * dt, q[i] + 0.5 * dt * a2, p[i] + 0.5 * dt * b2, beta, gamma, g, omega)
        a4, b4 = _duffing_rhs(t + dt, q[i] + dt * a3, p[i] + dt * b3, beta, gamma, g, omega)
        q[i + 1] = q[i] + dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        p[i + 1] = p[i] + dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
    return q, p
