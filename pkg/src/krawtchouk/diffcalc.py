"""Forward differences and the operator series ``(exp(hD) - 1)^s``.

``Delta_h^s = sum_j a_{s,j} (hD)^(s+j)``; the table ``a_{s,j}`` is the
coefficient of ``t^(s+j)`` in ``(e^t - 1)^s``.  The multinomial sum over
weighted partitions is kept alongside as an independent route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath

from .arith import as_fraction, to_mpf, weighted_partitions
from .edgeworth import eval_g_tilde, gaussian_prefactor


def forward_difference(f, s: int, x0, step=1):
    """Exact ``s``-fold forward difference ``sum_j (-1)^(s-j) C(s,j) f(x0 + j*step)``.

    ``f`` is either a callable or a mapping from grid points to values.
    """
    lookup = f if callable(f) else f.__getitem__
    total = 0
    for j in range(s + 1):
        try:
            val = lookup(x0 + j * step)
        except (KeyError, IndexError) as exc:
            raise ValueError(f"tabulation does not cover x0 + {j}*step") from exc
        total += (-1) ** (s - j) * math.comb(s, j) * val
    return total


@lru_cache(maxsize=None)
def _expm1_power_series(s: int, length: int) -> tuple[Fraction, ...]:
    # coefficients of (e^t - 1)^s up to t^(length-1)
    base = [Fraction(0)] + [Fraction(1, math.factorial(k)) for k in range(1, length)]
    out = [Fraction(1)] + [Fraction(0)] * (length - 1)
    for _ in range(s):
        nxt = [Fraction(0)] * length
        for i, a in enumerate(out):
            if a:
                for j in range(1, length - i):
                    nxt[i + j] += a * base[j]
        out = nxt
    return tuple(out)


@lru_cache(maxsize=None)
def a_coefficient(s: int, j: int) -> Fraction:
    """``a_{s,j}``: coefficient of ``t^(s+j)`` in ``(e^t - 1)^s``."""
    if s < 0 or j < 0:
        raise ValueError("s and j must be nonnegative")
    return _expm1_power_series(s, s + j + 1)[s + j]


def a_coefficient_multinomial(s: int, j: int) -> Fraction:
    """Multinomial route: ``s! prod_r (1/k_r!) (1/r!)^k_r`` over parts ``r = 1..j+1``.

    The sum runs over ``k_1 + ... + k_{j+1} = s`` with
    ``sum (r-1) k_r = j``; equivalently over weighted partitions of ``j`` into
    parts ``r - 1`` with at most ``s`` parts, padding ``k_1`` to make ``s``.
    """
    if s < 0 or j < 0:
        raise ValueError("s and j must be nonnegative")
    if s == 0:
        return Fraction(1 if j == 0 else 0)
    total = Fraction(0)
    for part in weighted_partitions(j):
        if part.s > s:
            continue
        # part.k[i] counts factors t^(i+2)/(i+2)!; the remaining s - part.s are t/1!
        term = Fraction(math.factorial(s), math.factorial(s - part.s))
        for i, k in enumerate(part.k):
            if k:
                term /= math.factorial(k) * math.factorial(i + 2) ** k
        total += term
    return total


@dataclass(frozen=True)
class DiffCoeffTable:
    smax: int
    jmax: int

    def __getitem__(self, key: tuple[int, int]) -> Fraction:
        s, j = key
        return a_coefficient(s, j)

    def rows(self):
        return {(s, j): a_coefficient(s, j) for s in range(self.smax + 1) for j in range(self.jmax + 1)}


def truncated_delta_h(f_derivatives, s: int, K: int, h):
    """``sum_{i=0}^K a_{s,i} f^(s+i)(x) h^(s+i)``; ``f_derivatives[r]`` holds ``f^(r)(x)``."""
    if len(f_derivatives) < s + K + 1:
        raise ValueError(f"need derivatives up to order {s + K}")
    total = 0
    for i in range(K + 1):
        total += a_coefficient(s, i) * f_derivatives[s + i] * h ** (s + i)
    return total


@dataclass(frozen=True)
class PsiSpec:
    s: int
    K: int
    p: Fraction
    N: int

    def __post_init__(self):
        object.__setattr__(self, "p", as_fraction(self.p))
        if self.s < 0 or self.K < 0:
            raise ValueError("s and K must be nonnegative")


def _psi_sum(s: int, outer: int, inner, N: int, p: Fraction, x, prec: int):
    with mpmath.workprec(prec):
        h = 1 / mpmath.sqrt(to_mpf(2 * N * p * (1 - p)))
        inv_root_n = 1 / mpmath.sqrt(N)
        total = mpmath.mpf(0)
        for i in range(outer + 1):
            a = a_coefficient(s, i)
            if a == 0:
                continue
            acc = mpmath.mpf(0)
            for nu in range(inner(i) + 1):
                acc += eval_g_tilde(nu, s + i, p, x, prec) * inv_root_n**nu
            total += to_mpf(a) * acc * h ** (s + i)
        return total


def psi(spec: PsiSpec, x, prec: int = 256):
    """``psi_s^K(x) = sum_{i<=K} a_{s,i} sum_{nu<=K-1-i} gt_{nu,s+i}(x) N^(-nu/2) h^(s+i)``.

    ``K = 0`` gives the empty sum, i.e. zero.
    """
    x = _mpf(x, prec)
    return _psi_sum(spec.s, spec.K, lambda i: spec.K - 1 - i, spec.N, spec.p, x, prec)


def delta_s_rho_expansion(s: int, M: int, N: int, p, x, prec: int = 256):
    """Expansion of ``sqrt(N) Delta_h^s rho(xhat(x))`` keeping ``i <= M+1``, ``nu <= M-i``."""
    p = as_fraction(p)
    x = _mpf(x, prec)
    body = _psi_sum(s, M + 1, lambda i: M - i, N, p, x, prec)
    with mpmath.workprec(prec):
        return gaussian_prefactor(p, x, prec) * body


def _mpf(x, prec):
    with mpmath.workprec(prec):
        return to_mpf(x) if isinstance(x, (int, Fraction)) else mpmath.mpf(x)
