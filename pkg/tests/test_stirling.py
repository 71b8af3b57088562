from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import pytest

from krawtchouk.arith import double_factorial, to_mpf
from krawtchouk.edgeworth import eval_g_tilde
from krawtchouk.orthopoly import weight_rho
from krawtchouk.stirling import (
    StirlingContext,
    d_tau,
    f_m,
    lemma1_check,
    ln_gamma,
    log_rho_reconstruction,
    phi_m,
    r_tau,
    remark2_d_leading,
    remark2_r_leading,
    rho_real,
    s_remainder,
    stirling_tail_bound,
)
from krawtchouk.verify import GridSpec, fit_slope

CTX = StirlingContext(m=4, precision_bits=256)


def _tau(N, p, x):
    return (to_mpf(N * p) + mpmath.sqrt(to_mpf(2 * N * p * (1 - p))) * x) / N


def test_f_m_examples():
    assert f_m(1, 1) == Fraction(1, 12)
    assert f_m(7, 0) == 0
    z = Fraction(5, 2)
    assert f_m(z, 2) == 1 / (12 * z) - 1 / (360 * z**3)
    with mpmath.workprec(128):
        assert abs(f_m(to_mpf(z), 2) - to_mpf(f_m(z, 2))) < mpmath.mpf(10) ** -35
    with pytest.raises(ZeroDivisionError):
        f_m(0, 3)


def test_ln_gamma_against_factorial():
    with mpmath.workprec(256):
        exact = mpmath.log(to_mpf(math.factorial(99)))
        assert abs(ln_gamma(100, CTX) - exact) / exact < 1e-15


def test_ln_gamma_half_integer():
    with mpmath.workprec(256):
        closed = mpmath.log(to_mpf(Fraction(double_factorial(19), 2**10)) * mpmath.sqrt(mpmath.pi))
        assert abs(ln_gamma(Fraction(21, 2), CTX) - closed) < 1e-12


def test_ln_gamma_small_arguments_are_lifted():
    with mpmath.workprec(256):
        for z in (Fraction(1, 3), 1, Fraction(7, 2), 9):
            assert abs(ln_gamma(z, CTX) - mpmath.loggamma(to_mpf(z))) < mpmath.mpf(10) ** -12
    with pytest.raises(ValueError):
        ln_gamma(0, CTX)
    with pytest.raises(ValueError):
        StirlingContext(m=-1)


def test_ln_gamma_functional_equation():
    with mpmath.workprec(256):
        for k in range(20, 101):
            z = to_mpf(Fraction(k, 2))
            gap = ln_gamma(z + 1, CTX) - ln_gamma(z, CTX) - mpmath.log(z)
            bound = 2 * stirling_tail_bound(z, CTX.m)
            assert abs(gap) <= bound


def test_context_for_precision_meets_tail():
    ctx = StirlingContext.for_precision(300)
    assert stirling_tail_bound(ctx.shift_threshold, ctx.m) < mpmath.mpf(2) ** -300
    with mpmath.workprec(320):
        assert abs(ln_gamma(Fraction(3, 7), ctx) - mpmath.loggamma(mpmath.mpf(3) / 7)) < mpmath.mpf(2) ** -290


def test_rho_real_matches_exact_weight():
    p = Fraction(3, 10)
    for N, xhat in [(50, 17), (1000, 311), (4096, 1200)]:
        with mpmath.workprec(256):
            exact = to_mpf(weight_rho(N, p, xhat), 256)
            assert abs(rho_real(N, p, xhat, 256) / exact - 1) < mpmath.mpf(2) ** -230


def test_r_tau_minimum_at_p():
    with mpmath.workprec(200):
        for p in (Fraction(3, 10), Fraction(1, 2)):
            pm = to_mpf(p)
            assert r_tau(pm, p) == 0
            assert abs(mpmath.diff(lambda t: r_tau(t, p), pm)) < mpmath.mpf(10) ** -50
            assert abs(d_tau(pm, p)) < mpmath.mpf(10) ** -60


def _r_on_radius(p):
    with mpmath.workprec(128):
        pm = to_mpf(p)
        return [r_tau(pm + mpmath.mpf(k) / 100, p) for k in range(-20, 21)]


def test_r_tau_nonnegative_near_symmetric_p():
    values = _r_on_radius(Fraction(1, 2))
    assert min(values) == 0 and values.count(0) == 1


@pytest.mark.xfail(strict=True, raises=AssertionError, reason="for p < 1/2 the cubic term makes r negative above p")
def test_r_tau_nonnegative_near_p_three_tenths():
    assert min(_r_on_radius(Fraction(3, 10))) >= 0


def test_tau_domain_errors():
    with pytest.raises(ValueError):
        r_tau(mpmath.mpf(0), Fraction(1, 2))
    with pytest.raises(ValueError):
        d_tau(mpmath.mpf("1.5"), Fraction(1, 2))
    with pytest.raises(ValueError):
        phi_m(100, 64, Fraction(1, 2), CTX)


def _leading_residual_slope(which, printed):
    p = Fraction(3, 10)
    x = mpmath.mpf("0.7")
    Ns = [2**k for k in range(10, 18)]
    res = []
    with mpmath.workprec(200):
        for N in Ns:
            tau = _tau(N, p, x)
            if which == "r":
                res.append(N * r_tau(tau, p) - remark2_r_leading(x, N, p, printed))
            else:
                res.append(d_tau(tau, p) - remark2_d_leading(x, N, p, printed))
    return fit_slope(Ns, res)[0]


@pytest.mark.parametrize("which", ["r", "d"])
def test_leading_terms_of_r_and_d(which):
    assert _leading_residual_slope(which, printed=False) == pytest.approx(-1, abs=0.1)


@pytest.mark.parametrize("which", ["r", "d"])
def test_opposite_sign_leading_terms_leave_half_order(which):
    # with the sign flipped the residual is twice the leading term
    assert _leading_residual_slope(which, printed=True) == pytest.approx(-0.5, abs=0.1)


def test_leading_terms_recombine_into_q1():
    p = Fraction(3, 10)
    with mpmath.workprec(200):
        x, N = mpmath.mpf("0.9"), 10**6
        combo = -remark2_r_leading(x, N, p) - remark2_d_leading(x, N, p) / 2
        assert abs(combo - eval_g_tilde(1, 0, p, x, 200) / mpmath.sqrt(N)) < mpmath.mpf(10) ** -40


def test_reconstruction_at_centre():
    N, p = 2**14, Fraction(1, 2)
    with mpmath.workprec(256):
        exact = to_mpf(weight_rho(N, p, N // 2), 256)
        rebuilt = mpmath.exp(log_rho_reconstruction(0, N, p, CTX))
        assert abs(rebuilt / exact - 1) < 1e-8


def test_reconstruction_improves_with_m():
    N, p, xhat = 2**16, Fraction(3, 10), 2**16 * 3 // 10 + 40
    with mpmath.workprec(320):
        x = (xhat - to_mpf(N * p)) / mpmath.sqrt(to_mpf(2 * N * p * (1 - p)))
        exact = mpmath.log(to_mpf(weight_rho(N, p, xhat), 320))
        err = {}
        for m in (2, 4):
            ctx = StirlingContext(m=m, precision_bits=320)
            err[m] = abs(log_rho_reconstruction(x, N, p, ctx) - exact)
        assert err[4] < err[2]


def test_exp_phi_matches_first_two_edgeworth_terms():
    p = Fraction(3, 10)
    x = mpmath.mpf("0.6")
    Ns = [2**k for k in range(10, 18)]
    res = []
    with mpmath.workprec(200):
        for N in Ns:
            approx = 1 + eval_g_tilde(1, 0, p, x, 200) / mpmath.sqrt(N)
            res.append(mpmath.exp(phi_m(x, N, p, CTX)) - approx)
    slope, _, _ = fit_slope(Ns, res)
    assert slope == pytest.approx(-1, abs=0.1)


def test_s_remainder_bounded_by_c_over_root_n():
    p = Fraction(3, 10)
    xs = [mpmath.mpf(k) / 4 for k in range(-8, 9)]
    Ns = [2**k for k in range(10, 16)]
    sups = []
    with mpmath.workprec(200):
        for N in Ns:
            sups.append(max(abs(s_remainder(x, N, p, 200)) for x in xs))
        C = sups[0] * mpmath.sqrt(Ns[0])
        # 10% headroom for the O(1/N) correction that the smallest N still carries
        for N, s in zip(Ns[1:], sups[1:]):
            assert s <= 1.1 * C / mpmath.sqrt(N)


def test_s_remainder_smaller_at_symmetric_centre():
    with mpmath.workprec(200):
        p, N = Fraction(1, 2), 4096
        assert abs(s_remainder(0, N, p)) < abs(s_remainder(1, N, p))


def test_lemma1_m1_decreasing():
    report = lemma1_check(1, 1, Fraction(3, 10), GridSpec(base=2**10, count=5), prec=128)
    assert report.passed, report.summary()
    assert report.monotone_decreasing


def test_lemma1_m0_symmetric_upper_bound():
    report = lemma1_check(0, 1, Fraction(1, 2), GridSpec(base=2**10, count=5), prec=128)
    assert report.passed, report.summary()
    # the N^(-1/2) term vanishes by symmetry, so the decay is a full order
    assert report.slope == pytest.approx(-1, abs=0.1)


@pytest.mark.xfail(strict=True, raises=AssertionError, reason="symmetric weight decays like 1/N, not N^(-1/2)")
def test_lemma1_m0_symmetric_half_order_as_stated():
    report = lemma1_check(0, 1, Fraction(1, 2), GridSpec(base=2**10, count=5), prec=128)
    assert abs(report.slope + 0.5) <= 0.25


def test_lemma1_rejects_other_orders():
    with pytest.raises(ValueError):
        lemma1_check(3, 1, Fraction(1, 2))
