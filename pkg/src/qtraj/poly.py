"""Normal-ordered polynomials in the ladder operators.

A :class:`NormalPoly` stores ``sum c[m, n] a†^m a^n``.  Building model operators
this way gives the numba kernels a banded form (each monomial touches a single
diagonal) and makes displacement of the frame an exact binomial expansion.
"""
from __future__ import annotations

from math import comb, factorial

import numpy as np

from .fock import make_annihilation


class NormalPoly:
    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        for key, c in (terms or {}).items():
            if c != 0:
                self.terms[(int(key[0]), int(key[1]))] = complex(c)

    @classmethod
    def a(cls):
        return cls({(0, 1): 1.0})

    @classmethod
    def adag(cls):
        return cls({(1, 0): 1.0})

    @classmethod
    def identity(cls):
        return cls({(0, 0): 1.0})

    @classmethod
    def q(cls):
        """Position quadrature (a + a†)/√2."""
        s = 1 / np.sqrt(2.0)
        return cls({(0, 1): s, (1, 0): s})

    @classmethod
    def p(cls):
        """Momentum quadrature (a − a†)/(i√2)."""
        s = 1 / np.sqrt(2.0)
        return cls({(0, 1): -1j * s, (1, 0): 1j * s})

    @property
    def degree(self):
        return max((m + n for m, n in self.terms), default=0)

    def __add__(self, other):
        if not isinstance(other, NormalPoly):
            other = NormalPoly({(0, 0): other})
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return NormalPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return NormalPoly({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, NormalPoly):
            return NormalPoly({k: c * other for k, c in self.terms.items()})
        out = {}
        for (m, n), c1 in self.terms.items():
            for (k, l), c2 in other.terms.items():
                # a^n a†^k = sum_j C(n,j) C(k,j) j! a†^(k-j) a^(n-j)
                for j in range(min(n, k) + 1):
                    w = comb(n, j) * comb(k, j) * factorial(j)
                    key = (m + k - j, n + l - j)
                    out[key] = out.get(key, 0) + c1 * c2 * w
        return NormalPoly(out)

    def __rmul__(self, other):
        return self * other

    def __pow__(self, k):
        out = NormalPoly.identity()
        for _ in range(k):
            out = out * self
        return out

    def dag(self):
        return NormalPoly({(n, m): np.conj(c) for (m, n), c in self.terms.items()})

    def coeff_array(self, size):
        """Dense coefficient table ``c[m, n]`` of shape (size, size)."""
        arr = np.zeros((size, size), dtype=complex)
        for (m, n), c in self.terms.items():
            arr[m, n] = c
        return arr

    def linear_coeffs(self):
        """Return (u, v, w) for ``u a + v a† + w``; raises if nonlinear."""
        if self.degree > 1:
            raise ValueError("operator is not linear in a, a†")
        t = self.terms
        return t.get((0, 1), 0j), t.get((1, 0), 0j), t.get((0, 0), 0j)

    def to_matrix(self, dim):
        a = make_annihilation(dim)
        ad = a.conj().T
        out = np.zeros((dim, dim), dtype=complex)
        for (m, n), c in self.terms.items():
            out += c * (np.linalg.matrix_power(ad, m) @ np.linalg.matrix_power(a, n))
        return out

    def __repr__(self):
        body = " + ".join(f"({c:.4g}) a†^{m} a^{n}" for (m, n), c in sorted(self.terms.items()))
        return f"NormalPoly({body or '0'})"
