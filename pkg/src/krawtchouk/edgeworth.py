"""Bernoulli cumulants and the Edgeworth-type local expansion of the binomial weight.

With ``x`` the standardised coordinate (``xhat = Np + sqrt(2Npq) x``)::

    sqrt(N) rho(xhat) ~ exp(-x^2) / (sqrt(2 pi) sigma) * sum_nu qt_nu(x) N^(-nu/2)

The coefficients ``b_{nu,s}`` carry half-integer powers of ``pq``; they are
stored exactly as elements of ``Q(w)`` with ``w**2 = 2pq``.  Since
``2^(-(nu/2+s)) sigma^(-(nu+2s)) = w^(-(nu+2s))`` this is the natural unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath

from .arith import RadicalCoeff, VPoly, as_fraction, binomial, to_mpf, weighted_partitions
from .orthopoly import hermite


@dataclass(frozen=True)
class CumulantTable:
    p: Fraction
    entries: tuple[Fraction, ...]  # entries[i] is gamma_{i+1}

    def __getitem__(self, m: int) -> Fraction:
        if m < 1:
            raise IndexError("cumulants are indexed from 1")
        return self.entries[m - 1]

    def __len__(self) -> int:
        return len(self.entries)


@lru_cache(maxsize=None)
def bernoulli_cumulants(p, m: int) -> CumulantTable:
    """Cumulants of one Bernoulli(p) trial from its raw moments (all equal to ``p``)."""
    p = as_fraction(p)
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    kappa: list[Fraction] = []
    for n in range(1, m + 1):
        val = p
        for j in range(1, n):
            val -= binomial(n - 1, j - 1) * kappa[j - 1] * p
        kappa.append(val)
    return CumulantTable(p, tuple(kappa))


@dataclass(frozen=True)
class EdgeworthSummand:
    partition: tuple[int, ...]
    s: int
    b: RadicalCoeff  # constant element of Q(w)
    hermite_index: int


@dataclass(frozen=True)
class EdgeworthTerm:
    nu: int
    p: Fraction
    summands: tuple[EdgeworthSummand, ...]

    @property
    def wsq(self) -> Fraction:
        return 2 * self.p * (1 - self.p)

    def poly(self, r: int = 0) -> RadicalCoeff:
        """``exp(x^2) (d/dx)^r [exp(-x^2) qt_nu(x)]`` as a polynomial in ``x``."""
        out = RadicalCoeff.of(0, self.wsq)
        for term in self.summands:
            out = out + term.b * hermite(term.hermite_index + r) * ((-1) ** r)
        return out


@lru_cache(maxsize=None)
def edgeworth_term(nu: int, p) -> EdgeworthTerm:
    p = as_fraction(p)
    wsq = 2 * p * (1 - p)
    gammas = bernoulli_cumulants(p, nu + 2)
    summands = []
    for part in weighted_partitions(nu):
        coef = Fraction(1)
        for m, k_m in enumerate(part.k, start=1):
            if k_m:
                coef *= (gammas[m + 2] / math.factorial(m + 2)) ** k_m / math.factorial(k_m)
        b = RadicalCoeff.w_power(-(nu + 2 * part.s), wsq) * coef
        summands.append(EdgeworthSummand(part.k, part.s, b, nu + 2 * part.s))
    return EdgeworthTerm(nu, p, tuple(summands))


def q_tilde(nu: int, p) -> RadicalCoeff:
    return edgeworth_term(nu, p).poly(0)


@lru_cache(maxsize=None)
def g_tilde(nu: int, r: int, p) -> RadicalCoeff:
    return edgeworth_term(nu, p).poly(r)


@lru_cache(maxsize=4096)
def _numeric_poly(nu: int, r: int, p: Fraction, prec: int):
    # mpf coefficient list with w substituted
    g = g_tilde(nu, r, p)
    with mpmath.workprec(prec):
        w = mpmath.sqrt(to_mpf(g.wsq))
        deg = max(g.a.degree, g.b.degree)
        return tuple(to_mpf(g.a[i]) + to_mpf(g.b[i]) * w for i in range(deg + 1))


def eval_g_tilde(nu: int, r: int, p, x, prec: int = 256):
    coeffs = _numeric_poly(nu, r, as_fraction(p), prec)
    with mpmath.workprec(prec):
        return mpmath.polyval(list(reversed(coeffs)), x) if coeffs else mpmath.mpf(0)


def gaussian_prefactor(p, x, prec: int = 256):
    """``exp(-x^2) / (sqrt(2 pi) sigma)``."""
    p = as_fraction(p)
    with mpmath.workprec(prec):
        sigma = mpmath.sqrt(to_mpf(p * (1 - p)))
        return mpmath.exp(-x * x) / (mpmath.sqrt(2 * mpmath.pi) * sigma)


def petrov_density_derivative(M: int, N: int, p, r: int, x, prec: int = 256):
    """Expansion of ``(d/dx)^r sqrt(N) rho(xhat(x))`` through ``N^(-M/2)``."""
    p = as_fraction(p)
    with mpmath.workprec(prec):
        x = to_mpf(x) if isinstance(x, (int, Fraction)) else mpmath.mpf(x)
        inv_root_n = 1 / mpmath.sqrt(N)
        total = mpmath.mpf(0)
        for nu in range(M + 1):
            total += eval_g_tilde(nu, r, p, x, prec) * inv_root_n**nu
        return gaussian_prefactor(p, x, prec) * total


def petrov_density(M: int, N: int, p, x, prec: int = 256):
    """Local expansion ``phi^M(x)`` of ``sqrt(N) rho(xhat(x))``."""
    return petrov_density_derivative(M, N, p, 0, x, prec)
