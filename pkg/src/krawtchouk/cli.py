"""``krawtchouk`` command line: eval, expand, verify, table.

Exit codes: 0 success, 2 precondition violation, 3 verification failure.
Rationals are given as ``a/b``; decimals are accepted only for ``x``/``v``
(and ``xhat``) and are rounded at the working precision with a warning.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction

import mpmath

from .arith import TruncationError, as_fraction, to_mpf
from .expansion import (
    corollary1_eval,
    rho_kn_exact,
    symbolic_expansion,
    theorem2_eval,
)
from .orthopoly import (
    DomainError,
    KrawtchoukParams,
    hermite,
    krawtchouk,
    krawtchouk_nonnormalized,
    rho_at,
    weight_rho,
)
from .verify import CLAIMS, GridSpec, SweepConfig, UnknownClaimError, uniform_sweep

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_VERIFY_FAILED = 3

DEFAULT_PRECISION = 256
DEFAULT_GRID = (2**10, 2, 8)


class PreconditionError(Exception):
    pass


def parse_rational(text: str, name: str) -> Fraction:
    """Exact ``a/b`` or integer literal; anything else is a precondition error."""
    try:
        if "." in text or "e" in text.lower():
            raise ValueError
        return as_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise PreconditionError(f"{name} must be an exact rational literal like 3/10, got {text!r}")


def parse_real(text: str, name: str, prec: int, warn):
    """Rational literal, or a decimal rounded at ``prec`` bits (with a warning)."""
    try:
        return parse_rational(text, name)
    except PreconditionError:
        pass
    try:
        with mpmath.workprec(prec):
            value = mpmath.mpf(text)
    except (ValueError, TypeError):
        raise PreconditionError(f"{name} must be a rational or decimal literal, got {text!r}")
    warn(f"warning: decimal {name}={text} rounded to a {prec}-bit float")
    return value


def _fmt(value, prec: int) -> str:
    if isinstance(value, (int, Fraction)):
        return str(value)
    digits = max(15, int(prec * 0.30103) - 2)
    return mpmath.nstr(value, digits, min_fixed=-5, max_fixed=5)


def _emit(out, fmt: str, config: dict, rows: list[tuple[str, str]]):
    if fmt == "json":
        out.write(json.dumps({"config": config, "result": dict(rows)}, sort_keys=True, indent=2) + "\n")
    elif fmt == "csv":
        _csv_header(out, config)
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(("quantity", "value"))
        writer.writerows(rows)
    else:
        _text_header(out, config)
        for key, value in rows:
            out.write(f"{key} = {value}\n")


def _text_header(out, config: dict):
    out.write("# config: " + json.dumps(config, sort_keys=True) + "\n")


def _csv_header(out, config: dict):
    for key in sorted(config):
        out.write(f"# {key}={config[key]}\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_eval(args, out, warn) -> int:
    prec = args.precision
    p = parse_rational(args.p, "p")
    params = KrawtchoukParams(p, args.N, args.n)
    given = [k for k in ("xhat", "x", "v") if getattr(args, k) is not None]
    if len(given) != 1:
        raise PreconditionError("give exactly one of --xhat, --x, --v")
    raw = parse_real(getattr(args, given[0]), given[0], prec, warn)
    with mpmath.workprec(prec):
        root = mpmath.sqrt(to_mpf(2 * args.N * p * (1 - p)))
        if given[0] == "xhat":
            xhat = raw
        elif given[0] == "v":
            xhat = args.N * p + raw if isinstance(raw, Fraction) else to_mpf(args.N * p) + raw
        else:
            xhat = to_mpf(args.N * p) + root * to_mpf(raw)
        if not 0 <= xhat <= args.N:
            raise PreconditionError(f"xhat must lie in [0, N] = [0, {args.N}], got {_fmt(xhat, prec)}")
        v = xhat - args.N * p if isinstance(xhat, Fraction) else xhat - to_mpf(args.N * p)
        x = to_mpf(raw) if given[0] == "x" else to_mpf(v) / root
        k = krawtchouk(params, xhat)
        K = krawtchouk_nonnormalized(params, xhat)
        interior = 0 < xhat < args.N
        lattice = isinstance(xhat, Fraction) and xhat.denominator == 1
        rows = [
            ("xhat", _fmt(xhat, prec)),
            ("v", _fmt(v, prec)),
            ("x", _fmt(x, prec)),
            ("k", _fmt(k, prec)),
            ("K", _fmt(K, prec)),
        ]
        if lattice or interior:
            rho = weight_rho(args.N, p, int(xhat)) if lattice else rho_at(args.N, p, xhat, prec)
            rows.append(("rho", _fmt(rho, prec)))
        rows.append(("H_n(x)", _fmt(hermite(args.n)(x), prec)))
        if interior:
            approx = theorem2_eval(args.n, args.M, args.N, p, x, prec)
            exact = rho_kn_exact(args.n, args.N, p, x, prec)
            rows.append(("expansion_rho_k", _fmt(approx, prec)))
            rows.append(("expansion_residual", _fmt(approx - exact, prec)))
        if args.n >= 1:
            c1 = corollary1_eval(args.n, args.N, p, v)
            rows.append(("corollary_k", _fmt(c1, prec)))
            rows.append(("corollary_residual", _fmt(k - c1, prec)))
    config = {
        "command": "eval",
        "p": str(p),
        "N": args.N,
        "n": args.n,
        "M": args.M,
        given[0]: getattr(args, given[0]),
        "precision": prec,
        "format": args.format,
    }
    _emit(out, args.format, config, rows)
    return EXIT_OK


def cmd_expand(args, out, warn) -> int:
    p = parse_rational(args.p, "p")
    if not 0 < p < 1:
        raise PreconditionError(f"p must lie in (0, 1), got {p}")
    if args.n < 0:
        raise PreconditionError("n must be nonnegative")
    terms = args.terms if args.terms is not None else args.n // 2 + 1
    try:
        result = symbolic_expansion(args.n, terms, p, M=args.M)
    except TruncationError as exc:
        raise PreconditionError(str(exc))
    config = {
        "command": "expand",
        "p": str(p),
        "n": args.n,
        "terms": terms,
        "M": result.regime["local_order_M"],
        "format": args.format,
    }
    rows = [(f"N^{power}", poly.format()) for power, poly in result.terms]
    if result.residual_order is None:
        rows.append(("residual", "0 (complete polynomial)"))
    else:
        rows.append(("residual", f"O(N^{result.residual_order})"))
    _emit(out, args.format, config, rows)
    return EXIT_OK


def cmd_verify(args, out, warn) -> int:
    p = parse_rational(args.p, "p")
    prec = args.precision
    alpha = parse_rational(args.alpha, "alpha") if args.alpha is not None else None
    grid = GridSpec(
        base=args.grid_base,
        ratio=args.grid_ratio,
        count=args.grid_count,
        regime="v=N^alpha" if alpha is not None else "fixed-v",
        alpha=alpha,
    )
    x = parse_rational(args.x, "x") if args.x is not None else None
    cfg = SweepConfig(
        n=args.n,
        M=args.M,
        p=p,
        i=args.i,
        r=args.r,
        A=parse_rational(args.A, "A"),
        v=parse_rational(args.v, "v"),
        x=x,
        lattice=not args.off_lattice,
        density=args.density,
        N=args.N,
        grid=grid,
        prec=prec,
        tol=args.tol,
        mode=args.mode,
        printed=args.printed,
        check_precision=not args.no_precision_check,
        workers=args.workers,
    )
    report = uniform_sweep(args.claim, cfg)
    if args.format == "csv":
        body = "".join(f"# {k}={v}\n" for k, v in sorted({"claim": args.claim, **cfg.describe()}.items()))
        body += report.to_csv()
    else:
        body = report.to_json() + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(body)
    else:
        out.write(body)
    warn(report.summary())
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def cmd_table(args, out, warn) -> int:
    p = parse_rational(args.p, "p")
    params = KrawtchoukParams(p, args.N, args.n)
    lo = 0 if args.start is None else args.start
    hi = args.N if args.stop is None else args.stop
    if not 0 <= lo <= hi <= args.N:
        raise PreconditionError(f"need 0 <= start <= stop <= N = {args.N}")
    _csv_header(out, {"command": "table", "p": str(p), "N": args.N, "n": args.n, "start": lo, "stop": hi})
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("xhat", f"k_{args.n}"))
    for xhat in range(lo, hi + 1):
        writer.writerow((xhat, krawtchouk(params, Fraction(xhat))))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="krawtchouk",
        description="Exact Krawtchouk polynomials and their Hermite-type asymptotics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, fmt_choices=("text", "json", "csv"), fmt_default="text"):
        sp.add_argument("--p", required=True, help="success probability as an exact rational a/b")
        sp.add_argument("--precision", type=int, default=DEFAULT_PRECISION, help="working precision in bits (default 256)")
        sp.add_argument("--format", choices=fmt_choices, default=fmt_default)

    ev = sub.add_parser("eval", help="evaluate k_n, K_n, rho, H_n and the expansions at one point")
    common(ev)
    ev.add_argument("--N", type=int, required=True)
    ev.add_argument("--n", type=int, required=True)
    ev.add_argument("--M", type=int, default=2, help="local-expansion order for the Hermite expansion (default 2)")
    ev.add_argument("--xhat", help="lattice coordinate")
    ev.add_argument("--x", help="standardised coordinate, xhat = Np + sqrt(2Npq) x")
    ev.add_argument("--v", help="centred coordinate, xhat = Np + v")
    ev.set_defaults(func=cmd_eval)

    ex = sub.add_parser("expand", help="exact polynomials c_j(v) of k_n(Np + v) in powers of N")
    common(ex)
    ex.add_argument("--n", type=int, required=True)
    ex.add_argument("--terms", type=int, help="number of leading powers of N (default: all, n//2 + 1)")
    ex.add_argument("--M", type=int, help="local-expansion order (default: smallest sufficient)")
    ex.set_defaults(func=cmd_expand)

    ve = sub.add_parser("verify", help="fit the residual order of one claim over an N grid")
    common(ve, ("json", "csv"), "json")
    ve.add_argument("--claim", required=True, choices=CLAIMS)
    ve.add_argument("--n", type=int, default=3)
    ve.add_argument("--M", type=int, default=2)
    ve.add_argument("--i", type=int, default=0, help="point shift for the non-normalised corollary")
    ve.add_argument("--r", type=int, default=1, help="derivative order for thm1_diff")
    ve.add_argument("--A", default="1", help="half-width of the sampled x interval")
    ve.add_argument("--v", default="1", help="fixed v for the corollary claims")
    ve.add_argument("--x", help="single x instead of a sampled interval")
    ve.add_argument("--alpha", help="switch to the v = N^alpha regime")
    ve.add_argument("--N", type=int, default=20, help="N for the orthogonality check")
    ve.add_argument("--density", type=int, default=64, help="sample points per unit of x (default 64)")
    ve.add_argument("--off-lattice", action="store_true", help="thm1 at real x instead of lattice points")
    ve.add_argument("--printed", action="store_true", help="use the published corollary coefficients verbatim")
    ve.add_argument("--grid-base", type=int, default=DEFAULT_GRID[0])
    ve.add_argument("--grid-ratio", type=int, default=DEFAULT_GRID[1])
    ve.add_argument("--grid-count", type=int, default=DEFAULT_GRID[2])
    ve.add_argument("--tol", type=float, help="slope tolerance (default per claim)")
    ve.add_argument("--mode", choices=("upper", "two-sided"), default="upper")
    ve.add_argument("--no-precision-check", action="store_true")
    ve.add_argument("--workers", type=int, default=1, help="processes for grid points (default 1)")
    ve.add_argument("--output", help="write the report here instead of stdout")
    ve.set_defaults(func=cmd_verify)

    ta = sub.add_parser("table", help="dump k_n over a lattice range as CSV")
    ta.add_argument("--p", required=True)
    ta.add_argument("--N", type=int, required=True)
    ta.add_argument("--n", type=int, required=True)
    ta.add_argument("--start", type=int)
    ta.add_argument("--stop", type=int)
    ta.set_defaults(func=cmd_table)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PRECONDITION if exc.code else EXIT_OK

    def warn(msg):
        err.write(msg + "\n")

    try:
        return args.func(args, out, warn)
    except (PreconditionError, DomainError, UnknownClaimError, ValueError) as exc:
        warn(f"error: {exc}")
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
