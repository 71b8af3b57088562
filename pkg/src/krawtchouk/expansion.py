"""Hermite-type expansions of Krawtchouk polynomials.

Numeric side: the main expansion of ``rho(xhat) k_n(xhat)`` built from the
discrete-Leibniz form and the differenced local expansion, the classical
Hermite limit, Sharapudinov's formula and the explicit low-order corollaries.

Symbolic side: :func:`symbolic_expansion` returns the exact polynomials
``c_j(v)`` in ``k_n(Np + v) = sum_j c_{j+1}(v) N^([n/2]-j)`` by dividing the
series for ``rho k_n`` by the series for ``rho``; the shared factor
``exp(-x^2) / (sqrt(2 pi N) sigma)`` cancels, so everything stays polynomial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .arith import (
    AsymptoticSeries,
    RadicalCoeff,
    TruncationError,
    VPoly,
    as_fraction,
    binomial,
    double_factorial,
    eps_series_of_x_poly,
    falling_factorial,
    to_mpf,
)
from .diffcalc import PsiSpec, a_coefficient, psi
from .edgeworth import g_tilde, gaussian_prefactor, petrov_density_derivative, q_tilde
from .orthopoly import DomainError, KrawtchoukParams, hermite, krawtchouk, rho_at


class ExpansionStructureError(AssertionError):
    """The symbolic series kept a half-integer power of N or an odd power of w."""


# ---------------------------------------------------------------------------
# numeric evaluators


def theorem2_eval(n: int, M: int, N: int, p, x, prec: int = 256, psi_order: int | None = None):
    """Approximation of ``rho(xhat) k_n(xhat)`` at ``xhat = Np + sqrt(2Npq) x``.

    The differenced densities use ``psi_{n-k}^K`` with ``K = M + 1`` by default
    (inner Edgeworth sums run to ``nu <= M - i``); this is the truncation whose
    error is ``O(N^((n-M-2)/2))``.  ``psi_order=M`` reproduces the bare
    ``psi^M`` reading, which loses half an order and vanishes at ``M = 0``.
    """
    if n < 0 or M < 0:
        raise ValueError("n and M must be nonnegative")
    p = as_fraction(p)
    q = 1 - p
    K = M + 1 if psi_order is None else psi_order
    with mpmath.workprec(prec):
        x = to_mpf(x) if isinstance(x, (int, Fraction)) else mpmath.mpf(x)
        xhat = to_mpf(N * p) + mpmath.sqrt(to_mpf(2 * N * p * q)) * x
        total = mpmath.mpf(0)
        for k in range(min(M, n) + 1):
            weight = binomial(n, k) * falling_factorial(Fraction(n), k)
            if weight == 0:
                continue
            total += (
                to_mpf(weight)
                * falling_factorial(xhat + n - k, n - k)
                * psi(PsiSpec(n - k, K, p, N), x, prec)
            )
        pref = gaussian_prefactor(p, x, prec) / mpmath.sqrt(N)
        return pref * to_mpf((-q) ** n / math.factorial(n)) * total


def rho_kn_exact(n: int, N: int, p, x, prec: int = 256):
    """Reference value ``rho(xhat) k_n(xhat)`` at the standardised point ``x``."""
    p = as_fraction(p)
    with mpmath.workprec(prec):
        x = to_mpf(x) if isinstance(x, (int, Fraction)) else mpmath.mpf(x)
        xhat = to_mpf(N * p) + mpmath.sqrt(to_mpf(2 * N * p * (1 - p))) * x
        k = krawtchouk(KrawtchoukParams(p, N, n), xhat)
        return rho_at(N, p, xhat, prec) * k


def classical_limit_residual(n: int, N: int, p, x, prec: int = 256):
    """``(2/(Npq))^(n/2) n! k_n(xhat) - H_n(x)``."""
    p = as_fraction(p)
    with mpmath.workprec(prec):
        x = to_mpf(x) if isinstance(x, (int, Fraction)) else mpmath.mpf(x)
        npq = to_mpf(N * p * (1 - p))
        xhat = to_mpf(N * p) + mpmath.sqrt(2 * npq) * x
        k = krawtchouk(KrawtchoukParams(p, N, n), xhat)
        return (2 / npq) ** (mpmath.mpf(n) / 2) * math.factorial(n) * k - hermite(n)(x)


def sharapudinov_eval(n: int, N: int, p, x, prec: int = 256):
    """Both sides of Sharapudinov's formula; their difference is ``O(n^(7/4) N^(-1/2))``."""
    p = as_fraction(p)
    with mpmath.workprec(prec):
        x = to_mpf(x) if isinstance(x, (int, Fraction)) else mpmath.mpf(x)
        npq = to_mpf(N * p * (1 - p))
        xhat = to_mpf(N * p) + mpmath.sqrt(2 * npq) * x
        k = krawtchouk(KrawtchoukParams(p, N, n), xhat)
        lhs = (
            mpmath.sqrt(2 * npq * mpmath.pi * math.factorial(n))
            * npq ** (-mpmath.mpf(n) / 2)
            * rho_at(N, p, xhat, prec)
            * mpmath.exp(x * x / 2)
            * k
        )
        rhs = mpmath.exp(-x * x / 2) * hermite(n)(x) / mpmath.sqrt(mpmath.mpf(2) ** n * math.factorial(n))
        return lhs, rhs


# ---------------------------------------------------------------------------
# explicit corollaries


@dataclass(frozen=True)
class CorollaryCoeffs:
    """Linear and constant coefficients of the ``1/N`` correction for ``k_2l``.

    The exact expansion has ``t2 = (l-1)(1 + 4l - (16l-5)pq)``; the published
    display has ``+(16l-5)pq``, which only agrees at ``l = 1``.  ``printed=True``
    gives the published value.  With ``i`` given (``0`` included), ``t2`` is
    shifted by ``-9pq(i + 2l - 1)`` for the non-normalised polynomial on
    ``N - i`` points; ``i=None`` is the normalised case.
    """

    l: int
    t1: Fraction
    t2: Fraction
    i: int | None = None

    @classmethod
    def for_params(cls, l: int, p, i: int | None = None, printed: bool = False) -> "CorollaryCoeffs":
        p = as_fraction(p)
        pq = p * (1 - p)
        sign = 1 if printed else -1
        t1 = 6 * (p - Fraction(1, 2)) * (4 * l - 1)
        t2 = (l - 1) * (1 + 4 * l + sign * (16 * l - 5) * pq)
        if i is not None:
            t2 -= 9 * pq * (i + 2 * l - 1)
        return cls(l, t1, t2, i)


def corollary1_eval(n: int, N: int, p, v, printed: bool = False):
    """Two-term small-``v`` expansion of ``k_n(Np + v)``; exact for rational input."""
    if n < 1:
        raise DomainError("the corollary expansion needs n >= 1")
    p = as_fraction(p)
    pq = p * (1 - p)
    l, odd = divmod(n, 2)
    lead = Fraction((-1) ** l * double_factorial(2 * l - 1), math.factorial(2 * l)) * (pq * N) ** l
    if odd:
        return _lift(lead / 3, v) * (_lift(4 * l * (p - Fraction(1, 2)), v) + 3 * v)
    c = CorollaryCoeffs.for_params(l, p, printed=printed)
    inner = 9 * v * v + _lift(c.t1, v) * v + _lift(c.t2, v)
    return _lift(lead, v) * (1 - _lift(Fraction(l) / (9 * pq * N), v) * inner)


def _lift(c: Fraction, like):
    # mpf arithmetic does not accept Fraction operands
    return c if isinstance(like, (int, Fraction)) else to_mpf(c)


def corollary2_eval(n: int, p, N: int, i: int, v, printed: bool = False):
    """Expansion of the non-normalised ``K_n(Np + v, p, N - i)``.

    The odd-index case carries an extra factor ``-1`` relative to the
    published display (``K_1(x, p, N) = -v/(Np)`` fixes the sign), and the
    even case uses the corrected ``t2``; ``printed=True`` returns the display
    verbatim.
    """
    if n < 1:
        raise DomainError("the corollary expansion needs n >= 1")
    if N - i < n:
        raise DomainError(f"need N - i >= n, got N={N}, i={i}, n={n}")
    p = as_fraction(p)
    q = 1 - p
    pq = p * q
    l, odd = divmod(n, 2)
    u = v + i * p
    base = (-q / p) ** l * double_factorial(2 * l - 1)
    if odd:
        val = base * (2 * l + 1) / Fraction(N) ** (l + 1) * (4 * l * (p - Fraction(1, 2)) + 3 * u) / (3 * p)
        return val if printed else -val
    c = CorollaryCoeffs.for_params(l, p, i, printed=printed)
    return base / Fraction(N) ** l * (1 - (9 * u * u + c.t1 * u + c.t2) * l / (9 * pq * N))


def corollary2_via_relation(n: int, p, N: int, i: int, v, printed: bool = False):
    """``K_n(x, p, N1) = k_n(N1 p + v1, N1) / ((-p)^n C(N1, n))`` with the first corollary for ``k_n``."""
    p = as_fraction(p)
    N1 = N - i
    return corollary1_eval(n, N1, p, v + i * p, printed) / ((-p) ** n * binomial(N1, n))


def nonnormalized_exact(n: int, p, N: int, i: int, v):
    """Exact ``K_n(Np + v, p, N - i)``."""
    from .orthopoly import krawtchouk_nonnormalized

    p = as_fraction(p)
    return krawtchouk_nonnormalized(KrawtchoukParams(p, N - i, n), N * p + v)


def _display_series(n: int, p: Fraction, i: int, printed: bool) -> AsymptoticSeries:
    # the second corollary's display as a series in eps with v symbolic
    wsq = 2 * p * (1 - p)
    pq = p * (1 - p)
    l, odd = divmod(n, 2)
    u = AsymptoticSeries.constant(VPoly((i * p, 1), "v"), wsq)
    base = (-(1 - p) / p) ** l * double_factorial(2 * l - 1)
    if odd:
        body = u * 3 + 4 * l * (p - Fraction(1, 2))
        out = body.scale(base * (2 * l + 1) / (3 * p)).shift(2 * (l + 1))
        return out if printed else -out
    c = CorollaryCoeffs.for_params(l, p, i, printed=printed)
    inner = u * u * 9 + u * c.t1 + c.t2
    bracket = AsymptoticSeries.constant(1, wsq) - inner.scale(Fraction(l) / (9 * pq)).shift(2)
    return bracket.scale(base).shift(2 * l)


def corollary2_relation_series(n: int, p, i: int, printed: bool = False):
    """The display and the relation route, both expanded in ``eps = N^(-1/2)``.

    Both are truncated at ``eps^(2l+4)``, the display's error order, so the
    two must agree coefficient by coefficient.
    """
    p = as_fraction(p)
    wsq = 2 * p * (1 - p)
    pq = p * (1 - p)
    l, odd = divmod(n, 2)
    order = 2 * l + 4
    Ninv = AsymptoticSeries.constant(1, wsq, exponent=2)
    N1 = AsymptoticSeries.constant(1, wsq, exponent=-2) - i
    v1 = AsymptoticSeries.constant(VPoly((i * p, 1), "v"), wsq)
    lead = Fraction((-1) ** l * double_factorial(2 * l - 1), math.factorial(2 * l)) * pq**l
    if odd:
        k_series = (N1**l).scale(lead) * (v1 * 3 + 4 * l * (p - Fraction(1, 2))).scale(Fraction(1, 3))
    else:
        c = CorollaryCoeffs.for_params(l, p, printed=printed)
        inner = v1 * v1 * 9 + v1 * c.t1 + c.t2
        # 1/N1 = eps^2 / (1 - i eps^2)
        inv_n1 = (AsymptoticSeries.constant(1, wsq) - Ninv * i).inverse(order=order + 2).shift(2)
        bracket = AsymptoticSeries.constant(1, wsq) - (inner * inv_n1).scale(Fraction(l) / (9 * pq))
        k_series = (N1**l).scale(lead) * bracket
    binom = AsymptoticSeries.constant(1, wsq)
    for j in range(n):
        binom = binom * (N1 - j)
    binom = binom.scale(Fraction(1, math.factorial(n)) * (-p) ** n)
    relation = (k_series * binom.inverse(order=order + 2 * l + 2)).truncate(order)
    display = _display_series(n, p, i, printed).truncate(order)
    return display, relation


def derivative_closed_forms(l: int, p, N: int, v):
    """The two published closed forms for ``psi(x) (d/dx)^k rho(xhat)``, verbatim.

    Returns ``(odd_display, even_display)``; the first is labelled order
    ``2l+1`` and the second order ``2l``.  See :func:`derivative_forms_by_order`
    for what they actually approximate.
    """
    p = as_fraction(p)
    pq = p * (1 - p)
    tau1 = 6 * (1 - 2 * p) * (2 * l + 3) * (2 * l + 1)
    tau2 = (2 * l + 1) * (2 * l + 3) * (1 + l - (1 + 4 * l) * pq)
    A = double_factorial(2 * l - 1) * (-2) ** l
    odd_display = A * (1 + (36 * l * v * v + tau1 * v + tau2) / (36 * pq * N))
    with mpmath.workprec(max(mpmath.mp.prec, 64)):
        root = mpmath.sqrt(2) / mpmath.sqrt(to_mpf(N * pq))
        even_display = (
            (-1) ** (l + 1)
            * double_factorial(2 * l + 1)
            * 2**l
            * root
            * (to_mpf(v) + to_mpf((1 - 2 * p) * (2 * l + 3) / 6))
        )
    return odd_display, even_display


def derivative_forms_by_order(l: int, p, N: int, v):
    """Closed forms for ``psi(x) (d/dx)^r rho(xhat)`` at ``r = 2l`` and ``r = 2l+1``.

    Order ``2l`` is the first published display with the sign of its
    ``1/N`` correction reversed; order ``2l+1`` is the second display.
    """
    p = as_fraction(p)
    pq = p * (1 - p)
    tau1 = 6 * (1 - 2 * p) * (2 * l + 3) * (2 * l + 1)
    tau2 = (2 * l + 1) * (2 * l + 3) * (1 + l - (1 + 4 * l) * pq)
    A = double_factorial(2 * l - 1) * (-2) ** l
    even_order = A * (1 - (36 * l * v * v + tau1 * v + tau2) / (36 * pq * N))
    _, odd_order = derivative_closed_forms(l, p, N, v)
    return even_order, odd_order


def scaled_density_derivative(M: int, N: int, p, r: int, v, prec: int = 256):
    """``psi(x) (d/dx)^r rho(xhat)`` from the differentiated local expansion, ``x = v/sqrt(2Npq)``."""
    p = as_fraction(p)
    with mpmath.workprec(prec):
        x = to_mpf(v) / mpmath.sqrt(to_mpf(2 * N * p * (1 - p)))
        val = petrov_density_derivative(M, N, p, r, x, prec)
        return val * mpmath.sqrt(2 * mpmath.pi * to_mpf(p * (1 - p))) * mpmath.exp(x * x)


def m_v_simplified(N: int, p, v):
    """``1 - (1 - pq - 6 v (p - q)) / (12 pq N)``."""
    p = as_fraction(p)
    q = 1 - p
    return 1 - (1 - p * q - 6 * v * (p - q)) / (12 * p * q * N)


def m_v_exact(N: int, p, v, prec: int = 256):
    """``sqrt(2 pi N) sigma exp(x^2) rho(Np + v)``."""
    p = as_fraction(p)
    with mpmath.workprec(prec):
        pq = to_mpf(p * (1 - p))
        x2 = to_mpf(v) ** 2 / (2 * N * pq)
        xhat = to_mpf(N * p + v) if isinstance(v, (int, Fraction)) else to_mpf(N * p) + v
        return mpmath.sqrt(2 * mpmath.pi * N * pq) * mpmath.exp(x2) * rho_at(N, p, xhat, prec)


# ---------------------------------------------------------------------------
# symbolic engine


@dataclass
class ExpansionResult:
    """``k_n(Np + v) = sum_j c_{j+1}(v) N^([n/2]-j) + O(N^residual_order)``.

    ``residual_order`` is ``None`` when the listed terms are the whole polynomial.
    """

    n: int
    p: Fraction
    terms: list[tuple[int, VPoly]]
    residual_order: Fraction | None
    regime: dict = field(default_factory=dict)
    half_integer_powers: list[int] = field(default_factory=list)
    radical_powers: list[int] = field(default_factory=list)

    def c(self, j: int) -> VPoly:
        """``c_j(v)`` with the 1-based index used in the expansion."""
        return self.terms[j - 1][1]

    def coefficient_of_N(self, power: int) -> VPoly:
        for pw, poly in self.terms:
            if pw == power:
                return poly
        if self.residual_order is not None and power < self.residual_order:
            raise TruncationError(f"N^{power} lies inside the residual")
        return VPoly(var="v")

    def evaluate(self, N, v):
        return sum((poly(v) * Fraction(N) ** pw for pw, poly in self.terms), Fraction(0))


def _psi_series(s: int, M: int, p: Fraction) -> AsymptoticSeries:
    # h = eps / w; x = v eps / w; exact through eps^(s+M)
    wsq = 2 * p * (1 - p)
    order = s + M + 1
    total = AsymptoticSeries({}, wsq, order)
    for i in range(M + 1):
        a = a_coefficient(s, i)
        if a == 0:
            continue
        for nu in range(M - i + 1):
            shift = nu + s + i
            g = eps_series_of_x_poly(g_tilde(nu, s + i, p), order - shift)
            piece = g.shift(shift).scale(RadicalCoeff.w_power(-(s + i), wsq) * a)
            total = total + piece
    return total


def _falling_series(p: Fraction, shift: int, k: int) -> AsymptoticSeries:
    # (xhat + shift)^(k) with xhat = p eps^-2 + v, exact
    wsq = 2 * p * (1 - p)
    out = AsymptoticSeries.constant(1, wsq)
    for j in range(k):
        lin = AsymptoticSeries.constant(p, wsq, exponent=-2) + AsymptoticSeries.constant(
            VPoly((shift - j, 1), "v"), wsq
        )
        out = out * lin
    return out


def rho_kn_series(n: int, M: int, p) -> AsymptoticSeries:
    """Series for ``rho k_n`` divided by the Gaussian prefactor."""
    p = as_fraction(p)
    q = 1 - p
    wsq = 2 * p * (1 - p)
    total = AsymptoticSeries({}, wsq)
    for k in range(min(M, n) + 1):
        weight = binomial(n, k) * falling_factorial(Fraction(n), k)
        term = _falling_series(p, n - k, n - k) * _psi_series(n - k, M, p)
        total = total + term.scale(weight)
    total = AsymptoticSeries(total.terms, wsq, min(total.order, -n + M + 1))
    return total.scale((-q) ** n / math.factorial(n))


def rho_series(M: int, p) -> AsymptoticSeries:
    """``sum_{nu<=M} qt_nu(x) eps^nu`` with ``x = v eps / w``, exact through ``eps^M``."""
    p = as_fraction(p)
    wsq = 2 * p * (1 - p)
    total = AsymptoticSeries({}, wsq, M + 1)
    for nu in range(M + 1):
        total = total + eps_series_of_x_poly(q_tilde(nu, p), M + 1 - nu).shift(nu)
    return total


def required_order(n: int, terms: int) -> int:
    """Smallest local-expansion order ``M`` that fixes ``terms`` leading ``c_j``."""
    return n % 2 + 2 * terms - 2


def symbolic_expansion(n: int, terms: int, p, M: int | None = None, check: bool = True) -> ExpansionResult:
    """Exact ``c_1(v) .. c_terms(v)`` of ``k_n(Np + v)``.

    ``M`` defaults to the smallest sufficient order; an explicit ``M`` that is
    too small raises :class:`TruncationError` naming the required order.
    """
    if n < 0 or terms < 1:
        raise ValueError("need n >= 0 and terms >= 1")
    p = as_fraction(p)
    need = max(required_order(n, terms), 0)
    if M is None:
        M = need
    elif M < need:
        raise TruncationError(f"{terms} terms of k_{n} need local-expansion order M >= {need}, got {M}")
    series = rho_kn_series(n, M, p) / rho_series(M, p)
    top = n // 2
    out_terms = []
    for j in range(terms):
        e = -2 * top + 2 * j
        coeff = series.coefficient(e)
        out_terms.append((top - j, VPoly(coeff.a.coeffs, "v")))
    half = [e for e in series.odd_exponents()]
    radical = series.radical_exponents()
    if check and (half or radical):
        raise ExpansionStructureError(
            f"series for k_{n} kept eps-exponents {half} and w-odd exponents {radical}"
        )
    # k_n is a polynomial in N and v with integer powers only: the first omitted
    # term is N^(top - terms), and nothing is omitted once terms > top
    residual = Fraction(top - terms) if terms <= top else None
    return ExpansionResult(
        n=n,
        p=p,
        terms=out_terms,
        residual_order=residual,
        regime={"v": "fixed", "local_order_M": M},
        half_integer_powers=half,
        radical_powers=radical,
    )


def corollary1_polynomials(n: int, p, printed: bool = False) -> list[tuple[int, VPoly]]:
    """The two-term corollary as ``[(N-power, polynomial in v), ...]``."""
    p = as_fraction(p)
    pq = p * (1 - p)
    l, odd = divmod(n, 2)
    lead = Fraction((-1) ** l * double_factorial(2 * l - 1), math.factorial(2 * l)) * pq**l
    if odd:
        return [(l, VPoly((lead * 4 * l * (p - Fraction(1, 2)) / 3, lead), "v"))]
    c = CorollaryCoeffs.for_params(l, p, printed=printed)
    corr = VPoly((c.t2, c.t1, 9), "v") * (-lead * l / (9 * pq))
    return [(l, VPoly((lead,), "v")), (l - 1, corr)]
