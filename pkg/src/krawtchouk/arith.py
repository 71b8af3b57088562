"""Exact arithmetic kernel.

Rationals are plain :class:`fractions.Fraction`; floating values are
:class:`mpmath.mpf` evaluated under an explicit working precision.  On top
of those this module provides the combinatorial primitives and the small
formal ring used by the symbolic expansion engine:

* :class:`VPoly` -- univariate polynomial with rational coefficients,
* :class:`RadicalCoeff` -- ``a + b*w`` with ``a, b`` polynomials and
  ``w**2`` reduced to a fixed rational,
* :class:`AsymptoticSeries` -- truncated Laurent series in ``eps``
  (``eps**2 == 1/N``) with :class:`RadicalCoeff` coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, NamedTuple, Union

import mpmath

Number = Union[int, Fraction]

DEFAULT_PREC = 256


# ---------------------------------------------------------------------------
# scalars


def as_fraction(value) -> Fraction:
    """Parse ints, Fractions and strings like ``"3/10"`` exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def to_mpf(value, prec: int | None = None) -> mpmath.mpf:
    """Round an exact or floating value to an mpf at ``prec`` bits."""
    if prec is None:
        prec = mpmath.mp.prec
    with mpmath.workprec(prec):
        if isinstance(value, Fraction):
            return mpmath.mpf(value.numerator) / value.denominator
        return mpmath.mpf(value)


def precise(value, prec: int = DEFAULT_PREC) -> mpmath.mpf:
    if prec < 64:
        raise ValueError("precision_bits must be >= 64")
    return to_mpf(value, prec)


# ---------------------------------------------------------------------------
# combinatorics


def binomial(n: int, k: int) -> Fraction:
    if n < 0:
        raise ValueError("binomial requires n >= 0")
    if k < 0 or k > n:
        return Fraction(0)
    return Fraction(math.comb(n, k))


def falling_factorial(y, k: int):
    """``y (y-1) ... (y-k+1)``; works for Fractions, ints and mpf."""
    if k < 0:
        raise ValueError("falling factorial needs k >= 0")
    out = Fraction(1) if isinstance(y, (int, Fraction)) else mpmath.mpf(1)
    for i in range(k):
        out *= y - i
    return out


def falling_factorial_leading(m, C: int, l: int):
    """Two-term expansion ``m**l + (l*C - l*(l-1)/2) * m**(l-1)`` of ``(m+C)^(l)``."""
    if l == 0:
        return Fraction(1) if isinstance(m, (int, Fraction)) else mpmath.mpf(1)
    return m**l + (l * C - Fraction(l * (l - 1), 2)) * m ** (l - 1)


def double_factorial(k: int) -> int:
    if k < -1:
        raise ValueError("double factorial is defined for k >= -1")
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


@lru_cache(maxsize=None)
def _bernoulli_table(kmax: int) -> tuple[Fraction, ...]:
    # Akiyama-Tanigawa; even-index values agree with the B_1 = -1/2 convention.
    a = [Fraction(0)] * (kmax + 1)
    out = []
    for m in range(kmax + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        out.append(a[0])
    return tuple(out)


def bernoulli_number(k: int) -> Fraction:
    """Exact even-index Bernoulli number ``B_k`` (``B_2 = 1/6``)."""
    if k < 2 or k % 2:
        raise ValueError("only even k >= 2 are supported")
    # round the table size up so nearby requests share one cached table
    size = 64
    while size < k:
        size *= 2
    return _bernoulli_table(size)[k]


class Partition(NamedTuple):
    """A solution ``k`` of ``k_1 + 2 k_2 + ... + nu k_nu = nu`` with ``s = sum(k)``."""

    k: tuple[int, ...]
    s: int


def _parts(remaining: int, width: int, largest: int) -> Iterator[list[int]]:
    # multiplicities for part sizes largest, largest-1, ..., 1
    if largest == 0:
        if remaining == 0:
            yield []
        return
    for mult in range(remaining // largest, -1, -1):
        for rest in _parts(remaining - mult * largest, width, largest - 1):
            yield [mult] + rest


@lru_cache(maxsize=None)
def weighted_partitions(nu: int) -> tuple[Partition, ...]:
    """All nonnegative ``(k_1..k_nu)`` with ``sum(m * k_m) == nu``."""
    if nu < 0:
        raise ValueError("nu must be >= 0")
    out = []
    for mults in _parts(nu, nu, nu):
        k = tuple(reversed(mults))
        out.append(Partition(k, sum(k)))
    return tuple(sorted(out, key=lambda part: part.k, reverse=True))


# ---------------------------------------------------------------------------
# polynomials


def _trim(coeffs: Iterable) -> tuple[Fraction, ...]:
    c = [Fraction(x) for x in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


class VPoly:
    """Polynomial with exact rational coefficients; ``coeffs[i]`` multiplies ``var**i``.

    The zero polynomial has no coefficients and ``degree == -1``.
    """

    __slots__ = ("coeffs", "var")

    def __init__(self, coeffs: Iterable = (), var: str = "x"):
        self.coeffs = _trim(coeffs)
        self.var = var

    @classmethod
    def constant(cls, c, var: str = "x") -> "VPoly":
        return cls((c,), var)

    @classmethod
    def monomial(cls, degree: int, c=1, var: str = "x") -> "VPoly":
        return cls([0] * degree + [c], var)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __getitem__(self, i: int) -> Fraction:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Fraction(0)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = VPoly.constant(other)
        if not isinstance(other, VPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __add__(self, other) -> "VPoly":
        if isinstance(other, (int, Fraction)):
            other = VPoly.constant(other)
        if not isinstance(other, VPoly):
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        return VPoly((self[i] + other[i] for i in range(n)), self.var)

    __radd__ = __add__

    def __neg__(self) -> "VPoly":
        return VPoly((-c for c in self.coeffs), self.var)

    def __sub__(self, other) -> "VPoly":
        return self + (-other)

    def __rsub__(self, other) -> "VPoly":
        return (-self) + other

    def __mul__(self, other) -> "VPoly":
        if isinstance(other, (int, Fraction)):
            return VPoly((c * other for c in self.coeffs), self.var)
        if not isinstance(other, VPoly):
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return VPoly((), self.var)
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return VPoly(out, self.var)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "VPoly":
        out = VPoly.constant(1, self.var)
        for _ in range(k):
            out = out * self
        return out

    def __call__(self, x):
        """Horner evaluation at a Fraction, int or mpf."""
        if isinstance(x, (int, Fraction)):
            acc = Fraction(0)
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        acc = mpmath.mpf(0)
        for c in reversed(self.coeffs):
            acc = acc * x + to_mpf(c)
        return acc

    def derivative(self) -> "VPoly":
        return VPoly((i * c for i, c in enumerate(self.coeffs) if i), self.var)

    def __repr__(self) -> str:
        return f"VPoly({self.format()})"

    def format(self, var: str | None = None) -> str:
        var = var or self.var
        if self.is_zero():
            return "0"
        parts = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            mono = "" if i == 0 else (var if i == 1 else f"{var}^{i}")
            if mono and c == 1:
                term = mono
            elif mono and c == -1:
                term = f"-{mono}"
            else:
                term = f"{c}*{mono}" if mono else f"{c}"
            parts.append(term)
        return " + ".join(parts).replace("+ -", "- ")


# ---------------------------------------------------------------------------
# Q[v] adjoin w with w**2 = wsq


@dataclass(frozen=True)
class RadicalCoeff:
    """``a + b*w`` with ``w**2 == wsq``; ``a`` and ``b`` are :class:`VPoly`."""

    a: VPoly
    b: VPoly
    wsq: Fraction

    @classmethod
    def of(cls, a, wsq: Fraction, b=None) -> "RadicalCoeff":
        if not isinstance(a, VPoly):
            a = VPoly.constant(a)
        if b is None:
            b = VPoly()
        elif not isinstance(b, VPoly):
            b = VPoly.constant(b)
        return cls(a, b, Fraction(wsq))

    @classmethod
    def w_power(cls, k: int, wsq: Fraction) -> "RadicalCoeff":
        """``w**k`` for any integer ``k`` (``w**-1 == w / wsq``)."""
        wsq = Fraction(wsq)
        half, odd = divmod(k, 2)
        scale = wsq**half
        if odd:
            return cls(VPoly(), VPoly.constant(scale), wsq)
        return cls(VPoly.constant(scale), VPoly(), wsq)

    def is_zero(self) -> bool:
        return self.a.is_zero() and self.b.is_zero()

    def has_radical(self) -> bool:
        return not self.b.is_zero()

    def _check(self, other: "RadicalCoeff") -> None:
        if self.wsq != other.wsq:
            raise ValueError("RadicalCoeff operands use different w**2 reductions")

    def _coerce(self, other) -> "RadicalCoeff":
        if isinstance(other, RadicalCoeff):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction, VPoly)):
            return RadicalCoeff.of(other, self.wsq)
        raise TypeError(f"cannot combine RadicalCoeff with {type(other).__name__}")

    def __add__(self, other) -> "RadicalCoeff":
        other = self._coerce(other)
        return RadicalCoeff(self.a + other.a, self.b + other.b, self.wsq)

    __radd__ = __add__

    def __neg__(self) -> "RadicalCoeff":
        return RadicalCoeff(-self.a, -self.b, self.wsq)

    def __sub__(self, other) -> "RadicalCoeff":
        return self + (-self._coerce(other))

    def __mul__(self, other) -> "RadicalCoeff":
        if isinstance(other, (int, Fraction)):
            return RadicalCoeff(self.a * other, self.b * other, self.wsq)
        other = self._coerce(other)
        a = self.a * other.a + self.b * other.b * self.wsq
        b = self.a * other.b + self.b * other.a
        return RadicalCoeff(a, b, self.wsq)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, VPoly)):
            other = RadicalCoeff.of(other, self.wsq)
        if not isinstance(other, RadicalCoeff):
            return NotImplemented
        return self.a == other.a and self.b == other.b and self.wsq == other.wsq

    def __hash__(self) -> int:
        return hash((self.a, self.b, self.wsq))

    def inverse(self) -> "RadicalCoeff":
        """Inverse of a nonzero constant element of Q(w)."""
        if self.a.degree > 0 or self.b.degree > 0:
            raise ZeroDivisionError("only constant RadicalCoeff values are invertible")
        a, b = self.a[0], self.b[0]
        norm = a * a - b * b * self.wsq
        if norm == 0:
            raise ZeroDivisionError("RadicalCoeff is not invertible")
        return RadicalCoeff(VPoly.constant(a / norm), VPoly.constant(-b / norm), self.wsq)

    def evaluate(self, x, w=None):
        """Numeric value at variable ``x`` (``w`` defaults to ``sqrt(wsq)``)."""
        if w is None:
            w = mpmath.sqrt(to_mpf(self.wsq))
        return self.a(x) + self.b(x) * w

    def format(self, var: str = "v", wname: str = "w") -> str:
        if self.b.is_zero():
            return self.a.format(var)
        bs = f"({self.b.format(var)})*{wname}"
        if self.a.is_zero():
            return bs
        return f"{self.a.format(var)} + {bs}"


# ---------------------------------------------------------------------------
# truncated Laurent series in eps


class TruncationError(ValueError):
    """A series is not known to the order a caller asked for."""


class AsymptoticSeries:
    """Laurent series ``sum c_e eps**e`` known for exponents ``< order``.

    ``order`` is ``math.inf`` for series that are exact (finite sums).
    Coefficients are :class:`RadicalCoeff` values sharing one ``wsq``.
    """

    __slots__ = ("terms", "order", "wsq")

    def __init__(self, terms: dict[int, RadicalCoeff], wsq: Fraction, order=math.inf):
        self.wsq = Fraction(wsq)
        self.order = order
        self.terms = {
            e: c for e, c in sorted(terms.items()) if e < order and not c.is_zero()
        }

    @classmethod
    def constant(cls, c, wsq: Fraction, exponent: int = 0, order=math.inf):
        if not isinstance(c, RadicalCoeff):
            c = RadicalCoeff.of(c, wsq)
        return cls({exponent: c}, wsq, order)

    @property
    def valuation(self):
        return min(self.terms) if self.terms else self.order

    def coefficient(self, e: int) -> RadicalCoeff:
        if e >= self.order:
            raise TruncationError(f"eps^{e} lies beyond truncation order {self.order}")
        return self.terms.get(e, RadicalCoeff.of(0, self.wsq))

    def truncate(self, order) -> "AsymptoticSeries":
        return AsymptoticSeries(self.terms, self.wsq, min(order, self.order))

    def _check(self, other: "AsymptoticSeries") -> None:
        if self.wsq != other.wsq:
            raise ValueError("series use different w**2 reductions")

    def __add__(self, other) -> "AsymptoticSeries":
        if not isinstance(other, AsymptoticSeries):
            other = AsymptoticSeries.constant(other, self.wsq)
        self._check(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms[e] + c if e in terms else c
        return AsymptoticSeries(terms, self.wsq, min(self.order, other.order))

    __radd__ = __add__

    def __neg__(self) -> "AsymptoticSeries":
        return AsymptoticSeries({e: -c for e, c in self.terms.items()}, self.wsq, self.order)

    def __sub__(self, other) -> "AsymptoticSeries":
        return self + (-other)

    def scale(self, c) -> "AsymptoticSeries":
        return AsymptoticSeries({e: t * c for e, t in self.terms.items()}, self.wsq, self.order)

    def shift(self, k: int) -> "AsymptoticSeries":
        """Multiply by ``eps**k``."""
        return AsymptoticSeries(
            {e + k: c for e, c in self.terms.items()}, self.wsq, self.order + k
        )

    def __mul__(self, other) -> "AsymptoticSeries":
        if isinstance(other, (int, Fraction, RadicalCoeff, VPoly)):
            return self.scale(other)
        self._check(other)
        order = min(self.order + other.valuation, other.order + self.valuation)
        terms: dict[int, RadicalCoeff] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = e1 + e2
                if e >= order:
                    continue
                prod = c1 * c2
                terms[e] = terms[e] + prod if e in terms else prod
        return AsymptoticSeries(terms, self.wsq, order)

    __rmul__ = __mul__

    def inverse(self, order=None) -> "AsymptoticSeries":
        """Reciprocal of a series whose leading coefficient is an invertible constant.

        For an exact divisor the result is infinite; ``order`` caps it.
        """
        if not self.terms:
            raise ZeroDivisionError("series is zero to its known order")
        v = self.valuation
        lead_inv = self.terms[v].inverse()
        rel = self.order - v
        if order is not None:
            rel = min(rel, order + v)
        if rel == math.inf:
            raise TruncationError("inverse of an exact series needs an explicit order")
        rel = int(rel)
        # normalised u = 1 + sum_{k>=1} u_k eps^k; inverse by the usual recurrence
        u = {e - v: c * lead_inv for e, c in self.terms.items()}
        inv: dict[int, RadicalCoeff] = {0: RadicalCoeff.of(1, self.wsq)}
        for k in range(1, rel):
            acc = RadicalCoeff.of(0, self.wsq)
            for j in range(1, k + 1):
                if j in u and (k - j) in inv:
                    acc = acc + u[j] * inv[k - j]
            inv[k] = -acc
        out = AsymptoticSeries(inv, self.wsq, rel)
        return out.scale(lead_inv).shift(-v)

    def __truediv__(self, other) -> "AsymptoticSeries":
        if isinstance(other, (int, Fraction)):
            return self.scale(Fraction(1) / other)
        self._check(other)
        rel_self = self.order - self.valuation
        rel_other = other.order - other.valuation
        rel = min(rel_self, rel_other)
        if rel == math.inf:
            raise TruncationError("division of exact series needs an explicit truncation")
        inv = other.inverse(order=int(rel) - other.valuation)
        return (self * inv).truncate(self.valuation - other.valuation + rel)

    def __pow__(self, k: int) -> "AsymptoticSeries":
        if k < 0:
            raise ValueError("use inverse() for negative powers")
        out = AsymptoticSeries.constant(1, self.wsq)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, AsymptoticSeries):
            return NotImplemented
        return self.terms == other.terms and self.order == other.order

    def is_zero(self) -> bool:
        return not self.terms

    def odd_exponents(self) -> list[int]:
        return [e for e in self.terms if e % 2]

    def radical_exponents(self) -> list[int]:
        return [e for e, c in self.terms.items() if c.has_radical()]

    def __repr__(self) -> str:
        body = " + ".join(f"({c.format()})*eps^{e}" for e, c in self.terms.items()) or "0"
        return f"AsymptoticSeries({body} + O(eps^{self.order}))"


def eps_series_of_x_poly(poly: RadicalCoeff, order) -> AsymptoticSeries:
    """Substitute ``x = v*eps/w`` into a polynomial in ``x`` with Q(w) coefficients."""
    wsq = poly.wsq
    terms: dict[int, RadicalCoeff] = {}
    for part, wshift in ((poly.a, 0), (poly.b, 1)):
        for j, c in enumerate(part.coeffs):
            if c == 0 or j >= order:
                continue
            coeff = RadicalCoeff.w_power(wshift - j, wsq) * VPoly.monomial(j, c, "v")
            terms[j] = terms[j] + coeff if j in terms else coeff
    return AsymptoticSeries(terms, wsq, order)
