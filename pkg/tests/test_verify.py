from __future__ import annotations

import csv
import io
import json
import math
import statistics
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from krawtchouk.expansion import corollary1_eval
from krawtchouk.orthopoly import KrawtchoukParams, krawtchouk
from krawtchouk.verify import (
    CLAIMS,
    CSV_COLUMNS,
    SCHEMA_VERSION,
    ConvergenceReport,
    GridSpec,
    SweepConfig,
    UnknownClaimError,
    estimate_order,
    fit_slope,
    lattice_samples,
    uniform_sweep,
    x_samples,
)


def _synthetic(c, rate):
    def fn(N, prec):
        with mpmath.workprec(prec):
            return c * mpmath.mpf(N) ** rate

    return fn


def test_synthetic_half_order_slope():
    report = estimate_order(_synthetic(3, mpmath.mpf(-1) / 2), GridSpec(), target=-0.5)
    assert abs(report.slope + 0.5) < 1e-6
    assert report.stderr < 1e-6
    assert report.passed and report.monotone_decreasing and report.precision_stable


@given(rate=st.floats(-3, 1), c=st.floats(0.01, 100))
@settings(max_examples=25, deadline=None)
def test_fit_slope_matches_statistics(rate, c):
    Ns = [2**k for k in range(6, 14)]
    noise = [1 + 0.1 * math.sin(k) for k in range(len(Ns))]
    rs = [c * N**rate * e for N, e in zip(Ns, noise)]
    slope, _, intercept = fit_slope(Ns, rs)
    ref = statistics.linear_regression([math.log(N) for N in Ns], [math.log(r) for r in rs])
    assert slope == pytest.approx(ref.slope, abs=1e-9)
    assert intercept == pytest.approx(ref.intercept, abs=1e-9)


def test_modes():
    fn = _synthetic(1, -1)
    assert estimate_order(fn, GridSpec(), target=-0.5, mode="upper").passed
    assert not estimate_order(fn, GridSpec(), target=-0.5, mode="two-sided").passed
    assert not estimate_order(_synthetic(1, 0), GridSpec(), target=-0.5).passed
    with pytest.raises(ValueError):
        estimate_order(fn, GridSpec(), target=-1, mode="sideways")


def test_exact_verdict_for_l1_corollary():
    p = Fraction(3, 10)

    def fn(N, prec):
        v = Fraction(2, 3)
        return krawtchouk(KrawtchoukParams(p, N, 2), N * p + v) - corollary1_eval(2, N, p, v)

    report = estimate_order(fn, GridSpec(), target=-1)
    assert report.verdict == "exact" and report.passed
    assert report.exact_hits == GridSpec().N_values
    assert report.slope is None


def test_degenerate_verdict():
    fn = lambda N, prec: 0 if N > 2**11 else Fraction(1, N)
    report = estimate_order(fn, GridSpec(), target=-1)
    assert report.verdict == "degenerate" and not report.passed
    assert report.exact_hits == GridSpec().N_values[2:]


def test_precision_instability_is_flagged():
    # a residual that is pure rounding noise changes with the precision
    def fn(N, prec):
        with mpmath.workprec(prec):
            return abs((mpmath.mpf(1) / 3) * 3 - 1) + mpmath.mpf(2) ** (-prec) * N ** (prec / 256)

    report = estimate_order(fn, GridSpec(), target=5)
    assert report.precision_stable is False and not report.passed


def test_gridspec_validation():
    assert GridSpec().N_values == [2**k for k in range(10, 18)]
    with pytest.raises(ValueError):
        GridSpec(count=4)
    with pytest.raises(ValueError):
        GridSpec(ratio=1)
    with pytest.raises(ValueError):
        GridSpec(regime="v=N^alpha")
    with pytest.raises(ValueError):
        GridSpec(regime="moving")
    g = GridSpec(regime="v=N^alpha", alpha=Fraction(9, 20))
    assert g.describe()["alpha"] == "9/20"


def test_samples():
    cfg = SweepConfig(A=Fraction(1), density=64)
    xs = x_samples(cfg)
    assert len(xs) == 129 and xs[0] == -1 and xs[-1] == 1
    assert x_samples(SweepConfig(x=Fraction(1, 7))) == [Fraction(1, 7)]
    picks = lattice_samples(2**16, Fraction(1, 2), Fraction(1), 8)
    assert 2**15 in picks and len(picks) <= 2 * 8 + 3
    assert lattice_samples(20, Fraction(1, 2), Fraction(1), 64) == list(range(7, 14))


def test_report_serialisation_schema():
    report = uniform_sweep("cor1", n=3, p=Fraction(3, 10), v=Fraction(1), grid=GridSpec(count=5))
    data = json.loads(report.to_json())
    assert data["schema_version"] == SCHEMA_VERSION
    assert list(data) == sorted(data)
    assert "wall_time" not in data
    assert "wall_time" in json.loads(report.to_json(include_timing=True))
    assert data["grid"]["N_values"] == GridSpec(count=5).N_values
    assert data["config"]["p"] == "3/10" and data["precision"] == 256
    rows = list(csv.reader(io.StringIO(report.to_csv())))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 6
    assert report.summary().startswith("cor1: PASS slope")


def test_report_output_is_deterministic():
    def run(workers):
        return uniform_sweep(
            "m_v_simplified", p=Fraction(1, 3), v=Fraction(1), grid=GridSpec(count=5), workers=workers
        ).to_json()

    assert run(1) == run(1)
    # parallel evaluation changes nothing but the echoed worker count
    assert run(2) == run(1).replace('"workers": 1', '"workers": 2')


def test_sweep_examples():
    thm2 = uniform_sweep("thm2", n=3, M=2, p=Fraction(3, 10), A=Fraction(1), density=4, grid=GridSpec(count=5))
    # target (n-M-2)/2 = -1/2; the pass threshold is target + tol = -1/4
    assert thm2.passed and thm2.target == -0.5 and thm2.target + thm2.tol == -0.25
    cor1 = uniform_sweep("cor1", n=3, p=Fraction(3, 10), v=Fraction(1), grid=GridSpec(count=6))
    assert cor1.passed and cor1.slope == pytest.approx(-1, abs=0.1)
    mv = uniform_sweep("m_v_simplified", p=Fraction(1, 3), v=Fraction(1), grid=GridSpec(count=6))
    assert mv.passed
    ortho = uniform_sweep("orthogonality", N=20, p=Fraction(1, 3))
    assert ortho.verdict == "exact" and ortho.passed
    assert set(CLAIMS) >= {"thm1", "thm1_diff", "thm2", "cor1", "cor2", "sharapudinov", "lemma1", "m_v_simplified"}


def test_thm1_symmetric_m0_upper_claim():
    report = uniform_sweep("thm1", M=0, p=Fraction(1, 2), density=8, grid=GridSpec(count=5), prec=128)
    assert report.passed
    # the N^(-1/2) term vanishes by symmetry, so the residual falls a full order
    assert report.slope == pytest.approx(-1, abs=0.1)


def test_low_n_claims_report_exact():
    for n in (1, 2):
        report = uniform_sweep("cor1", n=n, p=Fraction(3, 10), v=Fraction(1), grid=GridSpec(count=5))
        assert report.verdict == "exact"


def test_unknown_claim():
    with pytest.raises(UnknownClaimError):
        uniform_sweep("thm9")


def test_report_defaults():
    r = ConvergenceReport(claim="x", N_values=[1], residuals=[Fraction(0)], target=0, tol=0)
    assert r.weighted_residuals == [0]
