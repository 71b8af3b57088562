"""Krawtchouk and Hermite polynomials, the binomial weight, and the identities
tying the three Krawtchouk constructions together.

Everything on integer or rational arguments is exact.  Real arguments (mpf)
are accepted by the polynomial evaluators; the weight at a non-integer point
goes through :mod:`krawtchouk.stirling`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath

from .arith import (
    VPoly,
    as_fraction,
    binomial,
    double_factorial,
    falling_factorial,
    to_mpf,
)


class DomainError(ValueError):
    """An argument violates a documented precondition."""


@dataclass(frozen=True)
class KrawtchoukParams:
    p: Fraction
    N: int
    n: int

    def __post_init__(self):
        object.__setattr__(self, "p", as_fraction(self.p))
        if not 0 < self.p < 1:
            raise DomainError(f"p must lie in (0, 1), got {self.p}")
        if self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N}")
        if not 0 <= self.n <= self.N:
            raise DomainError(f"need 0 <= n <= N, got n={self.n}, N={self.N}")

    @property
    def q(self) -> Fraction:
        return 1 - self.p


@dataclass(frozen=True)
class ScaledPoint:
    """A point given in any of the coordinates ``xhat = N p + v = N p + sqrt(2Npq) x``."""

    N: int
    p: Fraction
    xhat: object
    v: object
    x: mpmath.mpf

    @classmethod
    def from_xhat(cls, N, p, xhat, prec=256):
        p = as_fraction(p)
        v = xhat - N * p if isinstance(xhat, (int, Fraction)) else xhat - to_mpf(N * p, prec)
        return cls(N, p, xhat, v, _x_from_v(N, p, v, prec))

    @classmethod
    def from_v(cls, N, p, v, prec=256):
        p = as_fraction(p)
        xhat = N * p + v if isinstance(v, (int, Fraction)) else to_mpf(N * p, prec) + v
        return cls(N, p, xhat, v, _x_from_v(N, p, v, prec))

    @classmethod
    def from_x(cls, N, p, x, prec=256):
        p = as_fraction(p)
        with mpmath.workprec(prec):
            x = mpmath.mpf(x) if not isinstance(x, Fraction) else to_mpf(x)
            v = mpmath.sqrt(to_mpf(2 * N * p * (1 - p))) * x
            return cls(N, p, to_mpf(N * p) + v, v, x)

    @property
    def h(self) -> mpmath.mpf:
        return 1 / mpmath.sqrt(to_mpf(2 * self.N * self.p * (1 - self.p)))


def _x_from_v(N, p, v, prec):
    with mpmath.workprec(prec):
        return to_mpf(v) / mpmath.sqrt(to_mpf(2 * N * p * (1 - p)))


def _field_one(x):
    return Fraction(1) if isinstance(x, (int, Fraction)) else mpmath.mpf(1)


def _like(x, c: Fraction):
    return c if isinstance(x, (int, Fraction)) else to_mpf(c)


# ---------------------------------------------------------------------------
# Krawtchouk polynomials


def krawtchouk_nonnormalized(params: KrawtchoukParams, x):
    """``K_n(x, p, N) = 2F1(-x, -n; -N; 1/p)``, terminating at ``j = n``."""
    n, N = params.n, params.N
    inv_p = _like(x, 1 / params.p)
    term = _field_one(x)
    total = term
    for j in range(n):
        # ratio of consecutive hypergeometric terms
        term = term * (j - x) * (j - n) / ((j - N) * (j + 1)) * inv_p
        total += term
    return total


def krawtchouk_hypergeometric(params: KrawtchoukParams, x):
    """Normalised ``k_n^(p)(x, N) = (-p)^n C(N, n) K_n(x, p, N)``."""
    scale = (-params.p) ** params.n * binomial(params.N, params.n)
    return _like(x, scale) * krawtchouk_nonnormalized(params, x)


krawtchouk = krawtchouk_hypergeometric


@lru_cache(maxsize=256)
def krawtchouk_poly(params: KrawtchoukParams) -> VPoly:
    """``k_n^(p)`` as an exact polynomial in ``xhat``."""
    n, N, p = params.n, params.N, params.p
    out = VPoly(var="x")
    scale = (-p) ** n * binomial(N, n)
    for j in range(n + 1):
        # (-x)_j = (-1)^j x^(j), falling factorial
        coef = scale * Fraction((-1) ** j) * _pochhammer(-n, j) / (
            _pochhammer(-N, j) * math.factorial(j) * p**j
        )
        out = out + _falling_poly(j) * coef
    return out


def _pochhammer(a: int, j: int) -> Fraction:
    out = Fraction(1)
    for i in range(j):
        out *= a + i
    return out


@lru_cache(maxsize=None)
def _falling_poly(j: int, shift: int = 0) -> VPoly:
    out = VPoly.constant(1)
    for i in range(j):
        out = out * VPoly((shift - i, 1))
    return out


def weight_rho(N: int, p, x):
    """Binomial weight ``C(N, x) p^x q^(N-x)``; exact for integer ``x``.

    Non-integer ``x`` is evaluated with the Stirling log-Gamma routine at the
    current mpmath precision.
    """
    p = as_fraction(p)
    if isinstance(x, Fraction) and x.denominator == 1:
        x = int(x)
    if isinstance(x, int):
        if not 0 <= x <= N:
            raise DomainError(f"weight needs 0 <= x <= N, got x={x}, N={N}")
        return binomial(N, x) * p**x * (1 - p) ** (N - x)
    from .stirling import rho_real

    return rho_real(N, p, x)


def _require_rodrigues_range(params: KrawtchoukParams, x: int) -> None:
    if not (isinstance(x, int) or (isinstance(x, Fraction) and x.denominator == 1)):
        raise DomainError("exact Rodrigues evaluation needs an integer x")
    if not 0 <= x <= params.N - params.n:
        raise DomainError(
            f"Rodrigues form needs 0 <= x <= N - n = {params.N - params.n}, got {x}"
        )


def forward_difference_values(values, s: int, start: int = 0):
    """``s``-fold unit forward difference of a tabulated sequence at ``start``."""
    if start < 0 or start + s > len(values) - 1:
        raise DomainError("tabulation does not cover the difference stencil")
    out = 0
    for j in range(s + 1):
        out += (-1) ** (s - j) * math.comb(s, j) * values[start + j]
    return out


def krawtchouk_rodrigues(params: KrawtchoukParams, x) -> Fraction:
    """``(-q)^n / n! * Delta^n(rho(x) x^(n)) / rho(x)``."""
    _require_rodrigues_range(params, x)
    x = int(x)
    n, N, p = params.n, params.N, params.p
    table = [weight_rho(N, p, x + j) * falling_factorial(Fraction(x + j), n) for j in range(n + 1)]
    delta = forward_difference_values(table, n)
    return (-params.q) ** n / math.factorial(n) * delta / weight_rho(N, p, x)


def krawtchouk_leibniz(params: KrawtchoukParams, x) -> Fraction:
    """Discrete-Leibniz form: sum over ``k`` of ``C(n,k) n^(k) (x+n-k)^(n-k) Delta^(n-k) rho(x)``."""
    _require_rodrigues_range(params, x)
    x = int(x)
    n, N, p = params.n, params.N, params.p
    rho_table = [weight_rho(N, p, x + j) for j in range(n + 1)]
    total = Fraction(0)
    for k in range(n + 1):
        total += (
            binomial(n, k)
            * falling_factorial(Fraction(n), k)
            * falling_factorial(Fraction(x + n - k), n - k)
            * forward_difference_values(rho_table, n - k)
        )
    return (-params.q) ** n / math.factorial(n) * total / rho_table[0]


def orthogonality_sum(N: int, p, i: int, j: int) -> Fraction:
    """Exact ``sum_x k_i(x) k_j(x) rho(x)`` over ``x = 0..N``."""
    p = as_fraction(p)
    ki = krawtchouk_poly(KrawtchoukParams(p, N, i))
    kj = krawtchouk_poly(KrawtchoukParams(p, N, j))
    return sum((ki(x) * kj(x) * weight_rho(N, p, x) for x in range(N + 1)), Fraction(0))


def orthogonality_norm(N: int, p, j: int) -> Fraction:
    p = as_fraction(p)
    return binomial(N, j) * (p * (1 - p)) ** j


def self_duality_check(N: int, p, n: int, x: int) -> bool:
    """``K_x(n, p, N) == K_n(x, p, N)`` for lattice ``n, x``."""
    p = as_fraction(p)
    lhs = krawtchouk_nonnormalized(KrawtchoukParams(p, N, x), Fraction(n))
    rhs = krawtchouk_nonnormalized(KrawtchoukParams(p, N, n), Fraction(x))
    return lhs == rhs


# ---------------------------------------------------------------------------
# Hermite polynomials (physicists' convention)


@lru_cache(maxsize=None)
def hermite(n: int) -> VPoly:
    """``H_n`` via ``H_{n+1} = 2x H_n - 2n H_{n-1}``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    prev, cur = VPoly(), VPoly.constant(1)
    two_x = VPoly((0, 2))
    for k in range(n):
        prev, cur = cur, two_x * cur - prev * (2 * k)
    return cur


def _rising(a: int, j: int) -> Fraction:
    out = Fraction(1)
    for i in range(j):
        out *= a + i
    return out


def hermite_explicit(n: int) -> VPoly:
    """Closed even/odd forms of ``H_n`` through ``(-l)^(rising j)``."""
    l, odd = divmod(n, 2)
    if not odd:
        scale = (-1) ** l * 2**l * double_factorial(2 * l - 1)
        coeffs = [Fraction(0)] * (n + 1)
        coeffs[0] = Fraction(1)
        for j in range(1, l + 1):
            coeffs[2 * j] = Fraction(4**j) * _rising(-l, j) / math.factorial(2 * j)
    else:
        scale = (-1) ** l * 2 ** (l + 1) * double_factorial(2 * l + 1)
        coeffs = [Fraction(0)] * (n + 1)
        coeffs[1] = Fraction(1)
        for j in range(1, l + 1):
            coeffs[2 * j + 1] = Fraction(4**j) * _rising(-l, j) / math.factorial(2 * j + 1)
    return VPoly(coeffs) * scale


def hermite_small_x(n: int) -> VPoly:
    """Second-order small-``x`` truncation of ``H_n``."""
    l, odd = divmod(n, 2)
    if odd:
        return VPoly((0, (-1) ** l * 2 ** (l + 1) * double_factorial(2 * l + 1)))
    c = (-1) ** l * 2**l * double_factorial(2 * l - 1)
    return VPoly((c, 0, -2 * l * c))


def hermite_conversions(n: int, x, prec: int = 256):
    """``(He_n(x), D_n(x))`` derived from ``H_n``."""
    with mpmath.workprec(prec):
        x = to_mpf(x) if isinstance(x, Fraction) else mpmath.mpf(x)
        Hn = hermite(n)(x / mpmath.sqrt(2))
        scale = mpmath.mpf(2) ** (-mpmath.mpf(n) / 2)
        return scale * Hn, scale * mpmath.exp(-x * x / 4) * Hn


def rho_at(N: int, p, xhat, prec: int = 256):
    """Weight at ``xhat`` as an mpf: lattice points go through integer powers, others through log-Gamma."""
    p = as_fraction(p)
    with mpmath.workprec(prec):
        if isinstance(xhat, (int, Fraction)):
            if Fraction(xhat).denominator == 1:
                return _lattice_rho(N, p, int(xhat), prec)
            xhat = to_mpf(xhat)
        if mpmath.isint(xhat) and 0 <= xhat <= N:
            return _lattice_rho(N, p, int(xhat), prec)
    from .stirling import rho_real

    return rho_real(N, p, xhat, prec)


def _lattice_rho(N: int, p: Fraction, x: int, prec: int):
    if not 0 <= x <= N:
        raise DomainError(f"weight needs 0 <= x <= N, got x={x}, N={N}")
    if N <= 64:
        return to_mpf(weight_rho(N, p, x), prec)
    a, b = p.numerator, p.denominator
    # each rounded factor carries relative error 2^-wp; the powers amplify it by at most N
    with mpmath.workprec(prec + 32 + N.bit_length()):
        out = (
            mpmath.binomial(N, x)
            * mpmath.mpf(a) ** x
            * mpmath.mpf(b - a) ** (N - x)
            / mpmath.mpf(b) ** N
        )
    with mpmath.workprec(prec):
        return +out
