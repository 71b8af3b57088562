"""Stirling series for log-Gamma and the remainder machinery of the binomial weight.

``ln rho(z) = -(N/(2pq)) (z/N - p)^2 - ln(2 pi N pq)/2 + S(xi)`` where the
remainder ``S`` is approximated by

    Phi_m(xi) = F_m(N) - F_m(z) - F_m(N - z) - N r(z/N) - D(z/N)/2

with ``F_m`` the truncated Bernoulli correction of the Stirling series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath

from .arith import bernoulli_number, as_fraction, to_mpf


@dataclass(frozen=True)
class StirlingContext:
    m: int = 4
    precision_bits: int = 256
    shift_threshold: int = 10

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("m must be >= 0")

    @classmethod
    def for_precision(cls, bits: int) -> "StirlingContext":
        """Smallest threshold/order pair whose tail bound is below ``2**-bits``."""
        return _context_for_precision(bits)

    def tail_bound(self, z) -> mpmath.mpf:
        return stirling_tail_bound(z, self.m)


@lru_cache(maxsize=64)
def _context_for_precision(bits: int) -> StirlingContext:
    with mpmath.workprec(64):
        target = mpmath.mpf(2) ** (-bits - 8)
        z0 = max(10, math.ceil(bits * math.log(2) / (2 * math.pi)) + 2)
        while True:
            for m in range(1, 4 * z0):
                if stirling_tail_bound(z0, m) < target:
                    return StirlingContext(m=m, precision_bits=bits, shift_threshold=z0)
            z0 += 4


def stirling_tail_bound(z, m: int) -> mpmath.mpf:
    """First omitted term ``|B_{2m+2}| / ((2m+2)(2m+1) z^(2m+1))``; bounds the error for real z > 0."""
    b = abs(bernoulli_number(2 * m + 2))
    return to_mpf(b) / ((2 * m + 2) * (2 * m + 1) * mpmath.mpf(z) ** (2 * m + 1))


def f_m(z, m: int):
    """``F_m(z) = sum_{k=1}^m B_2k / (2k(2k-1) z^(2k-1))``."""
    if z == 0:
        raise ZeroDivisionError("F_m is undefined at z = 0")
    if isinstance(z, (int, Fraction)):
        z = Fraction(z)
        return sum(
            (bernoulli_number(2 * k) / (2 * k * (2 * k - 1) * z ** (2 * k - 1)) for k in range(1, m + 1)),
            Fraction(0),
        )
    total = mpmath.mpf(0)
    zinv = 1 / z
    zinv2 = zinv * zinv
    power = zinv
    for c in _fm_coefficients(m, mpmath.mp.prec):
        total += c * power
        power *= zinv2
    return total


@lru_cache(maxsize=32)
def _fm_coefficients(m: int, prec: int) -> tuple:
    return tuple(
        to_mpf(bernoulli_number(2 * k) / (2 * k * (2 * k - 1)), prec) for k in range(1, m + 1)
    )


def ln_gamma(z, ctx: StirlingContext = StirlingContext()):
    """Stirling evaluation of ``ln Gamma(z)`` for real ``z > 0``.

    Arguments below ``ctx.shift_threshold`` are lifted with
    ``ln Gamma(z) = ln Gamma(z + k) - ln(z (z+1) ... (z+k-1))``.
    """
    with mpmath.workprec(ctx.precision_bits + 16):
        z = to_mpf(z) if isinstance(z, (int, Fraction)) else mpmath.mpf(z)
        if z <= 0:
            raise ValueError("ln_gamma is only provided for z > 0")
        shift = mpmath.mpf(1)
        while z < ctx.shift_threshold:
            shift *= z
            z += 1
        out = (z - mpmath.mpf(1) / 2) * mpmath.log(z) - z + mpmath.log(2 * mpmath.pi) / 2
        out += f_m(z, ctx.m)
        return out - mpmath.log(shift)


def rho_real(N: int, p, xhat, prec: int | None = None):
    """Binomial weight at a real point through log-Gamma (``Gamma(1+x) Gamma(N+1-x)``)."""
    p = as_fraction(p)
    if prec is None:
        prec = mpmath.mp.prec
    # cancellation between the three log-Gamma terms costs about log2(N ln N) bits
    guard = 16 + int(math.log2(N * math.log(N + 2) + 2))
    ctx = StirlingContext.for_precision(prec + guard)
    with mpmath.workprec(prec + guard):
        xhat = to_mpf(xhat) if isinstance(xhat, (int, Fraction)) else mpmath.mpf(xhat)
        if not 0 < xhat < N:
            raise ValueError("real-argument weight needs 0 < xhat < N")
        log_rho = (
            ln_gamma(N + 1, ctx)
            - ln_gamma(1 + xhat, ctx)
            - ln_gamma(N + 1 - xhat, ctx)
            + xhat * mpmath.log(to_mpf(p))
            + (N - xhat) * mpmath.log(to_mpf(1 - p))
        )
        out = mpmath.exp(log_rho)
    return +out


def r_tau(tau, p):
    """``tau ln(tau/p) + (1-tau) ln((1-tau)/q) - (tau-p)^2/(2pq)``."""
    p = to_mpf(as_fraction(p))
    q = 1 - p
    if not 0 < tau < 1:
        raise ValueError("r(tau) needs 0 < tau < 1")
    return tau * mpmath.log(tau / p) + (1 - tau) * mpmath.log((1 - tau) / q) - (tau - p) ** 2 / (2 * p * q)


def d_tau(tau, p):
    """``ln(1 + (p - tau)(tau - q)/(pq))``."""
    p = to_mpf(as_fraction(p))
    q = 1 - p
    if not 0 < tau < 1:
        raise ValueError("D(tau) needs 0 < tau < 1")
    arg = 1 + (p - tau) * (tau - q) / (p * q)
    if arg <= 0:
        raise ValueError("D(tau): logarithm argument is not positive")
    return mpmath.log(arg)


def _xhat(N, p, x):
    return to_mpf(N * p) + mpmath.sqrt(to_mpf(2 * N * p * (1 - p))) * x


def phi_m(x, N: int, p, ctx: StirlingContext = StirlingContext()):
    """``Phi_m`` at the standardised point ``x``."""
    p = as_fraction(p)
    with mpmath.workprec(ctx.precision_bits + 16):
        x = to_mpf(x) if isinstance(x, (int, Fraction)) else mpmath.mpf(x)
        z = _xhat(N, p, x)
        if not 0 < z < N:
            raise ValueError("Phi_m needs 0 < xhat < N")
        tau = z / N
        return (
            f_m(mpmath.mpf(N), ctx.m)
            - f_m(z, ctx.m)
            - f_m(N - z, ctx.m)
            - N * r_tau(tau, p)
            - d_tau(tau, p) / 2
        )


def gaussian_log_part(x, N: int, p):
    """``-(N/(2pq))(xhat/N - p)^2 - ln(2 pi N pq)/2`` (equals ``-x^2 - ...``)."""
    p = as_fraction(p)
    pq = to_mpf(p * (1 - p))
    return -x * x - mpmath.log(2 * mpmath.pi * N * pq) / 2


def log_rho_reconstruction(x, N: int, p, ctx: StirlingContext = StirlingContext()):
    """``ln rho(xhat)`` rebuilt from the Gaussian part plus ``Phi_m``."""
    with mpmath.workprec(ctx.precision_bits + 16):
        x = to_mpf(x) if isinstance(x, (int, Fraction)) else mpmath.mpf(x)
        return gaussian_log_part(x, N, p) + phi_m(x, N, p, ctx)


def s_remainder(x, N: int, p, prec: int = 256):
    """Exact remainder ``S_N^0(x) = ln rho(xhat) - gaussian_log_part``."""
    p = as_fraction(p)
    with mpmath.workprec(prec):
        x = to_mpf(x) if isinstance(x, (int, Fraction)) else mpmath.mpf(x)
        return mpmath.log(rho_real(N, p, _xhat(N, p, x), prec)) - gaussian_log_part(x, N, p)


def remark2_r_leading(x, N: int, p, printed: bool = False):
    """Leading term of ``N r(xhat/N)``: ``(sqrt2/3)(2p-1)/sqrt(pq) x^3 / sqrt(N)``.

    The cubic Taylor term of ``r`` at ``tau = p`` is ``(p-q) d^3 / (6 p^2 q^2)``,
    which fixes the sign; ``printed=True`` returns the opposite-sign variant.
    """
    p = to_mpf(as_fraction(p))
    sign = -1 if printed else 1
    return sign * (mpmath.sqrt(2) / 3) * (2 * p - 1) / mpmath.sqrt(p * (1 - p)) * x**3 / mpmath.sqrt(N)


def remark2_d_leading(x, N: int, p, printed: bool = False):
    """Leading term of ``D(xhat/N)``: ``-sqrt2 (2p-1)/sqrt(pq) x / sqrt(N)``.

    From ``(p - tau)(tau - q) = -d (2p-1) - d^2`` with ``d = tau - p``;
    ``printed=True`` returns the opposite-sign variant.
    """
    p = to_mpf(as_fraction(p))
    sign = 1 if printed else -1
    return sign * mpmath.sqrt(2) * (2 * p - 1) / mpmath.sqrt(p * (1 - p)) * x / mpmath.sqrt(N)


def lemma1_check(M: int, A, p, grid=None, prec: int = 256, tol: float = 0.25):
    """Sampled sup over ``|x| <= A`` of ``|sqrt(N) rho(xhat) / phi^M(x) - 1| N^(M/2)`` on a grid of ``N``.

    The bound is checked on the real segment only.  The returned report fits
    the decay against the ``N^(-1/2)`` rate of the first omitted term.
    """
    if M not in (0, 1, 2):
        raise ValueError("lemma1_check covers M in {0, 1, 2}")
    from .verify import GridSpec, SweepConfig, uniform_sweep

    cfg = SweepConfig(M=M, A=A, p=p, grid=grid or GridSpec(), prec=prec, tol=tol)
    return uniform_sweep("lemma1", cfg)
