"""Empirical order certification.

A residual function is sampled on a geometric grid of ``N``, the slope of
``log|residual|`` against ``log N`` is fitted by least squares, and the fit is
compared with the claimed rate.  Residual functions take ``(N, prec)`` and
return an mpf or an exact Fraction; exact zeros are kept apart as exact hits.

Sup-norms over ``x`` or ``v`` are sampled sups on a dense grid, not true sups.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from functools import partial

import mpmath

from .arith import as_fraction, to_mpf
from .edgeworth import petrov_density, petrov_density_derivative
from .expansion import (
    classical_limit_residual,
    corollary1_eval,
    corollary2_eval,
    m_v_exact,
    m_v_simplified,
    nonnormalized_exact,
    rho_kn_exact,
    sharapudinov_eval,
    theorem2_eval,
)
from .orthopoly import (
    DomainError,
    KrawtchoukParams,
    krawtchouk,
    orthogonality_norm,
    orthogonality_sum,
    rho_at,
)

SCHEMA_VERSION = 1
CSV_COLUMNS = ("N", "residual", "weighted_residual")
CLAIMS = (
    "thm1",
    "thm1_diff",
    "thm2",
    "cor1",
    "cor2",
    "sharapudinov",
    "lemma1",
    "m_v_simplified",
    "orthogonality",
    "classical",
)
REGIMES = ("fixed-v", "v=N^alpha")
MODES = ("two-sided", "upper")


class UnknownClaimError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Geometric ``N`` grid plus the sample points and regime it is used with."""

    base: int = 2**10
    ratio: int = 2
    count: int = 8
    samples: tuple = ()
    regime: str = "fixed-v"
    alpha: Fraction | None = None
    seed: int = 0

    def __post_init__(self):
        if self.count < 5:
            raise ValueError(f"a convergence grid needs at least 5 N-values, got {self.count}")
        if self.ratio < 2:
            raise ValueError(f"grid ratio must be >= 2, got {self.ratio}")
        if self.base < 1:
            raise ValueError("grid base must be a positive integer")
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.regime == "v=N^alpha" and self.alpha is None:
            raise ValueError("the v=N^alpha regime needs alpha")

    @property
    def N_values(self) -> list[int]:
        return [self.base * self.ratio**k for k in range(self.count)]

    def describe(self) -> dict:
        return {
            "base": self.base,
            "ratio": self.ratio,
            "count": self.count,
            "N_values": self.N_values,
            "samples": [_render(s) for s in self.samples],
            "regime": self.regime,
            "alpha": None if self.alpha is None else str(self.alpha),
            "seed": self.seed,
        }


@dataclass
class ConvergenceReport:
    claim: str
    N_values: list[int]
    residuals: list
    target: float
    tol: float
    mode: str = "upper"
    slope: float | None = None
    stderr: float | None = None
    intercept: float | None = None
    verdict: str = "slope"
    passed: bool = False
    monotone_decreasing: bool = False
    exact_hits: list[int] = field(default_factory=list)
    precision: int = 256
    precision_slope: float | None = None
    precision_stable: bool | None = None
    wall_time: float = 0.0
    grid: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def weighted_residuals(self) -> list:
        # residual relative to the claimed rate; bounded iff the claim holds
        return [_weighted(r, N, self.target) for N, r in zip(self.N_values, self.residuals)]

    def summary(self) -> str:
        if self.verdict == "slope":
            what = f"slope {self.slope:+.3f} (stderr {self.stderr:.3f}) vs target {self.target:+.3f}"
            what += f" {'<=' if self.mode == 'upper' else '+/-'} {self.tol}"
            if self.mode == "upper":
                what += f" ({self.target + self.tol:+.3f})"
        else:
            what = f"verdict {self.verdict}"
        return f"{self.claim}: {'PASS' if self.passed else 'FAIL'} {what}"

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "claim": self.claim,
            "N_values": self.N_values,
            "residuals": [_render(r) for r in self.residuals],
            "weighted_residuals": [_render(r) for r in self.weighted_residuals],
            "target": self.target,
            "tol": self.tol,
            "mode": self.mode,
            "slope": _round(self.slope),
            "stderr": _round(self.stderr),
            "intercept": _round(self.intercept),
            "verdict": self.verdict,
            "passed": self.passed,
            "monotone_decreasing": self.monotone_decreasing,
            "exact_hits": self.exact_hits,
            "precision": self.precision,
            "precision_slope": _round(self.precision_slope),
            "precision_stable": self.precision_stable,
            "grid": self.grid,
            "config": self.config,
            "notes": self.notes,
        }
        if include_timing:
            out["wall_time"] = round(self.wall_time, 3)
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for N, r, w in zip(self.N_values, self.residuals, self.weighted_residuals):
            writer.writerow((N, _render(r), _render(w)))
        return buf.getvalue()


def _round(value):
    return None if value is None else round(value, 6)


def _render(value) -> str:
    if isinstance(value, (int, Fraction)):
        return str(value)
    return mpmath.nstr(value, 20, min_fixed=-3, max_fixed=3)


def _weighted(r, N, target):
    if isinstance(r, (int, Fraction)) and r == 0:
        return Fraction(0)
    with mpmath.workprec(128):
        return abs(to_mpf(r)) * mpmath.mpf(N) ** (-mpmath.mpf(target))


# ---------------------------------------------------------------------------
# slope fitting


def fit_slope(Ns, residuals) -> tuple[float, float, float]:
    """Least-squares ``(slope, stderr, intercept)`` of ``log|r|`` against ``log N``."""
    xs = [math.log(N) for N in Ns]
    ys = [float(mpmath.log(abs(to_mpf(r, 64)))) for r in residuals]
    n = len(xs)
    if n < 3:
        raise ValueError("slope fitting needs at least 3 points")
    mx, my = sum(xs) / n, sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx
    intercept = my - slope * mx
    ssr = sum((y - intercept - slope * x) ** 2 for x, y in zip(xs, ys))
    stderr = math.sqrt(ssr / (n - 2) / sxx)
    return slope, stderr, intercept


def _evaluate(residual_fn, Ns, prec, workers):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            # map preserves grid order whatever the scheduling
            return list(pool.map(residual_fn, Ns, [prec] * len(Ns)))
    return [residual_fn(N, prec) for N in Ns]


def _judge(slope, target, tol, mode) -> bool:
    if mode == "upper":
        return slope <= target + tol
    return abs(slope - target) <= tol


def estimate_order(
    residual_fn,
    grid: GridSpec,
    target: float,
    tol: float = 0.25,
    mode: str = "upper",
    prec: int = 256,
    check_precision: bool = True,
    workers: int = 1,
    claim: str = "custom",
    config: dict | None = None,
) -> ConvergenceReport:
    """Fit the decay rate of ``residual_fn(N, prec)`` over ``grid``.

    ``mode="upper"`` accepts any slope at or below ``target + tol`` (an
    ``O(N^target)`` claim); ``"two-sided"`` asks for ``|slope - target| <= tol``.
    With ``check_precision`` the residuals are recomputed at twice the
    precision and the two slopes must agree within 0.05.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    start = time.perf_counter()
    Ns = grid.N_values
    residuals = [_abs(r) for r in _evaluate(residual_fn, Ns, prec, workers)]
    report = ConvergenceReport(
        claim=claim,
        N_values=Ns,
        residuals=residuals,
        target=float(target),
        tol=tol,
        mode=mode,
        precision=prec,
        grid=grid.describe(),
        config=config or {},
    )
    nonzero = [(N, r) for N, r in zip(Ns, residuals) if r != 0]
    report.exact_hits = [N for N, r in zip(Ns, residuals) if r == 0]
    report.monotone_decreasing = all(a > b for a, b in zip(residuals, residuals[1:]))
    if not nonzero:
        report.verdict = "exact"
        report.passed = True
    elif len(nonzero) < 3:
        report.verdict = "degenerate"
        report.notes.append("fewer than 3 nonzero residuals; no slope fitted")
    else:
        report.slope, report.stderr, report.intercept = fit_slope(*zip(*nonzero))
        report.passed = _judge(report.slope, report.target, tol, mode)
        if check_precision:
            hi = [_abs(r) for r in _evaluate(residual_fn, Ns, 2 * prec, workers)]
            hi_nonzero = [(N, r) for N, r in zip(Ns, hi) if r != 0]
            if len(hi_nonzero) >= 3:
                report.precision_slope = fit_slope(*zip(*hi_nonzero))[0]
                report.precision_stable = abs(report.precision_slope - report.slope) <= 0.05
            else:
                report.precision_stable = False
            if not report.precision_stable:
                report.passed = False
                report.notes.append("slope moved by more than 0.05 under precision doubling")
    report.wall_time = time.perf_counter() - start
    return report


def _abs(r):
    if isinstance(r, (int, Fraction)):
        return abs(Fraction(r))
    return abs(r)


# ---------------------------------------------------------------------------
# claims


@dataclass(frozen=True)
class SweepConfig:
    """Parameters of one claim sweep; unused fields are ignored by a claim."""

    n: int = 3
    M: int = 2
    p: Fraction = Fraction(3, 10)
    i: int = 0
    r: int = 1
    A: Fraction = Fraction(1)
    v: Fraction = Fraction(1)
    x: Fraction | None = None
    lattice: bool = True
    density: int = 64
    N: int = 20
    grid: GridSpec = GridSpec()
    prec: int = 256
    tol: float | None = None
    mode: str = "upper"
    printed: bool = False
    check_precision: bool = True
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "p", as_fraction(self.p))
        object.__setattr__(self, "A", as_fraction(self.A))
        object.__setattr__(self, "v", as_fraction(self.v))
        if self.x is not None:
            object.__setattr__(self, "x", as_fraction(self.x))
        if not 0 < self.p < 1:
            raise DomainError(f"p must lie in (0, 1), got {self.p}")

    def describe(self) -> dict:
        out = {}
        for key, value in asdict(self).items():
            if key == "grid":
                continue
            out[key] = str(value) if isinstance(value, Fraction) else value
        return out


def x_samples(cfg: SweepConfig) -> list[Fraction]:
    """Dense sample of ``[-A, A]`` with ``density`` points per unit, or the single ``x``."""
    if cfg.x is not None:
        return [cfg.x]
    if cfg.grid.samples:
        return [as_fraction(s) for s in cfg.grid.samples]
    steps = math.ceil(cfg.A * cfg.density)
    return [cfg.A * Fraction(k, steps) for k in range(-steps, steps + 1)]


def lattice_samples(N: int, p: Fraction, A: Fraction, density: int) -> list[int]:
    """Lattice ``xhat`` with ``|x| <= A``; strided when denser than ``density`` per unit of ``x``."""
    with mpmath.workprec(128):
        sq = mpmath.sqrt(to_mpf(2 * N * p * (1 - p)))
        lo = int(mpmath.ceil(to_mpf(N * p) - to_mpf(A) * sq))
        hi = int(mpmath.floor(to_mpf(N * p) + to_mpf(A) * sq))
        lo, hi = max(lo, 0), min(hi, N)
        count = hi - lo + 1
        wanted = math.ceil(2 * A * density) + 1
    if count <= wanted:
        return list(range(lo, hi + 1))
    picks = {lo + (k * (count - 1)) // (wanted - 1) for k in range(wanted)}
    # keep the points nearest the centre, where odd terms vanish, in the sample
    centre = math.floor(N * p)
    picks.update(c for c in (centre, centre + 1) if lo <= c <= hi)
    return sorted(picks)


def _x_of(N, p, xhat):
    return to_mpf(xhat - N * p) / mpmath.sqrt(to_mpf(2 * N * p * (1 - p)))


def _v_values(N: int, cfg: SweepConfig):
    if cfg.grid.regime == "v=N^alpha":
        return [mpmath.mpf(N) ** to_mpf(as_fraction(cfg.grid.alpha))]
    if cfg.grid.samples:
        return [as_fraction(s) for s in cfg.grid.samples]
    return [cfg.v]


def _res_thm1(cfg: SweepConfig, N: int, prec: int):
    p, M = cfg.p, cfg.M
    with mpmath.workprec(prec):
        scale = mpmath.mpf(N) ** (mpmath.mpf(M) / 2)
        best = mpmath.mpf(0)
        if cfg.lattice:
            points = [(xh, _x_of(N, p, xh)) for xh in lattice_samples(N, p, cfg.A, cfg.density)]
        else:
            points = [(None, to_mpf(x)) for x in x_samples(cfg)]
        for xhat, x in points:
            if xhat is None:
                xhat = to_mpf(N * p) + mpmath.sqrt(to_mpf(2 * N * p * (1 - p))) * x
            exact = mpmath.sqrt(N) * rho_at(N, p, xhat, prec)
            diff = abs(exact - petrov_density(M, N, p, x, prec))
            best = max(best, (1 + abs(x) ** (M + 2)) * diff * scale)
        return best


def _scaled_rho(N, p):
    # follows the ambient precision, which mpmath.diff raises for its stencil
    def f(x):
        xhat = to_mpf(N * p) + mpmath.sqrt(to_mpf(2 * N * p * (1 - p))) * x
        return mpmath.sqrt(N) * rho_at(N, p, xhat, mpmath.mp.prec)

    return f


def _res_thm1_diff(cfg: SweepConfig, N: int, prec: int):
    p, M, r = cfg.p, cfg.M, cfg.r
    with mpmath.workprec(prec):
        f = _scaled_rho(N, p)
        best = mpmath.mpf(0)
        for x in x_samples(cfg):
            x = to_mpf(x)
            exact = mpmath.diff(f, x, r)
            best = max(best, abs(exact - petrov_density_derivative(M, N, p, r, x, prec)))
        return best


def _res_thm2(cfg: SweepConfig, N: int, prec: int):
    with mpmath.workprec(prec):
        best = mpmath.mpf(0)
        for x in x_samples(cfg):
            diff = theorem2_eval(cfg.n, cfg.M, N, cfg.p, x, prec) - rho_kn_exact(cfg.n, N, cfg.p, x, prec)
            best = max(best, abs(diff))
        return best


def _res_cor1(cfg: SweepConfig, N: int, prec: int):
    n, p = cfg.n, cfg.p
    l, odd = divmod(n, 2)
    # residual relative to the last retained power of N
    power = l if odd else l - 1
    best = 0
    with mpmath.workprec(prec):
        for v in _v_values(N, cfg):
            xhat = N * p + v if isinstance(v, Fraction) else to_mpf(N * p) + v
            exact = krawtchouk(KrawtchoukParams(p, N, n), xhat)
            diff = abs(exact - corollary1_eval(n, N, p, v, cfg.printed))
            if isinstance(diff, Fraction):
                diff = diff / Fraction(N) ** power
            else:
                diff = diff / mpmath.mpf(N) ** power
            best = diff if diff > best else best
    return best


def _res_cor2(cfg: SweepConfig, N: int, prec: int):
    n, p, i = cfg.n, cfg.p, cfg.i
    # both parities keep terms through N^-(l+1)
    power = -(n // 2 + 1)
    best = Fraction(0)
    for v in _v_values(N, cfg):
        v = as_fraction(v) if not isinstance(v, mpmath.mpf) else v
        if not isinstance(v, Fraction):
            raise DomainError("the second corollary sweep needs rational v")
        diff = abs(nonnormalized_exact(n, p, N, i, v) - corollary2_eval(n, p, N, i, v, cfg.printed))
        best = max(best, diff / Fraction(N) ** power)
    return best


def _res_sharapudinov(cfg: SweepConfig, N: int, prec: int):
    with mpmath.workprec(prec):
        best = mpmath.mpf(0)
        for x in x_samples(cfg):
            lhs, rhs = sharapudinov_eval(cfg.n, N, cfg.p, x, prec)
            best = max(best, abs(lhs - rhs))
        return best


def _res_lemma1(cfg: SweepConfig, N: int, prec: int):
    p, M = cfg.p, cfg.M
    with mpmath.workprec(prec):
        f = _scaled_rho(N, p)
        scale = mpmath.mpf(N) ** (mpmath.mpf(M) / 2)
        best = mpmath.mpf(0)
        for x in x_samples(cfg):
            x = to_mpf(x)
            best = max(best, abs(f(x) / petrov_density(M, N, p, x, prec) - 1) * scale)
        return best


def _res_m_v(cfg: SweepConfig, N: int, prec: int):
    best = mpmath.mpf(0)
    with mpmath.workprec(prec):
        for v in _v_values(N, cfg):
            if not isinstance(v, Fraction):
                raise DomainError("the M(v) sweep needs rational v")
            # o(1/N) claim: residual times N must vanish
            diff = abs(m_v_exact(N, cfg.p, v, prec) - to_mpf(m_v_simplified(N, cfg.p, v))) * N
            best = max(best, diff)
    return best


def _res_classical(cfg: SweepConfig, N: int, prec: int):
    with mpmath.workprec(prec):
        best = mpmath.mpf(0)
        for x in x_samples(cfg):
            best = max(best, abs(classical_limit_residual(cfg.n, N, cfg.p, x, prec)))
        return best


def _targets(claim: str, cfg: SweepConfig) -> tuple[float, float]:
    if claim in ("thm1", "lemma1"):
        return -0.5, 0.25
    if claim == "thm1_diff":
        return -(cfg.M + 1) / 2, 0.25
    if claim == "thm2":
        return (cfg.n - cfg.M - 2) / 2, 0.25
    if claim in ("cor1", "cor2", "m_v_simplified"):
        return -1.0, 0.25
    if claim in ("sharapudinov", "classical"):
        return -0.5, 0.15 if claim == "classical" else 0.25
    raise UnknownClaimError(f"unknown claim {claim!r}; expected one of {CLAIMS}")


_RESIDUALS = {
    "thm1": _res_thm1,
    "thm1_diff": _res_thm1_diff,
    "thm2": _res_thm2,
    "cor1": _res_cor1,
    "cor2": _res_cor2,
    "sharapudinov": _res_sharapudinov,
    "lemma1": _res_lemma1,
    "m_v_simplified": _res_m_v,
    "classical": _res_classical,
}


def orthogonality_report(N: int, p, jmax: int | None = None) -> ConvergenceReport:
    """Exact ``sum k_i k_j rho - norm_j delta_ij`` over all ``i, j <= jmax``."""
    p = as_fraction(p)
    jmax = N if jmax is None else jmax
    start = time.perf_counter()
    worst = Fraction(0)
    for i in range(jmax + 1):
        for j in range(i, jmax + 1):
            expected = orthogonality_norm(N, p, j) if i == j else 0
            worst = max(worst, abs(orthogonality_sum(N, p, i, j) - expected))
    report = ConvergenceReport(
        claim="orthogonality",
        N_values=[N],
        residuals=[worst],
        target=0.0,
        tol=0.0,
        mode="two-sided",
        verdict="exact" if worst == 0 else "degenerate",
        passed=worst == 0,
        exact_hits=[N] if worst == 0 else [],
        precision=0,
        config={"N": N, "p": str(p), "jmax": jmax},
    )
    report.wall_time = time.perf_counter() - start
    return report


def uniform_sweep(claim: str, config: SweepConfig | None = None, **overrides) -> ConvergenceReport:
    """Run one claim over its grid and fit the order.

    The claim-specific target rate and default tolerance come from
    :func:`_targets`; ``config.tol`` overrides the tolerance.
    """
    cfg = config or SweepConfig()
    if overrides:
        cfg = replace(cfg, **overrides)
    if claim == "orthogonality":
        return orthogonality_report(cfg.N, cfg.p)
    if claim not in _RESIDUALS:
        raise UnknownClaimError(f"unknown claim {claim!r}; expected one of {CLAIMS}")
    target, tol = _targets(claim, cfg)
    if cfg.tol is not None:
        tol = cfg.tol
    fn = partial(_RESIDUALS[claim], cfg)
    return estimate_order(
        fn,
        cfg.grid,
        target=target,
        tol=tol,
        mode=cfg.mode,
        prec=cfg.prec,
        check_precision=cfg.check_precision,
        workers=cfg.workers,
        claim=claim,
        config=cfg.describe(),
    )
