"""Command-line driver.

Curve files are line-oriented ``key = value`` text::

    # comment
    genus = 2
    lambda = 0, 4, 0, -5, 0, 1

``lambda`` lists the ascending coefficients lambda_0 .. lambda_{2g+1} of
f(x) (the last one must be 1) as complex numbers written ``a``, ``bi`` or
``a+bi``.  Blank lines and ``#`` comments are ignored; keys may appear once.

Exit codes: 0 success, 1 verification failure, 2 bad input, 3 quadrature
failure, 4 flow failure.
"""
from __future__ import annotations

import argparse
import hashlib
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .curve import CurvePoint, lift, make_curve, make_divisor
from .errors import (
    CurveError,
    CurveParseError,
    InvalidDivisor,
    LoopSolitonError,
    OnThetaDivisor,
    PathThroughBranchPoint,
    QuadratureFailure,
    SeriesDiverges,
    SpecialDivisor,
    StepCollapse,
)

BUILTIN_CURVE = "genus = 2\nlambda = 0, 4, 0, -5, 0, 1\n"
SUITES = ("periods", "schwarz", "identities", "mkdv", "fourier", "partition")


# ---------------------------------------------------------------- text I/O

def parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "")
    if not t:
        raise ValueError("empty number")
    return complex(t.replace("i", "j").replace("I", "j"))


def format_complex(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.17g}{z.imag:+.17g}i"


def parse_curve_spec(text: str):
    """Parse curve-file text into a curve; raises CurveParseError with the line number."""
    seen = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CurveParseError("expected 'key = value'", no)
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in ("genus", "lambda"):
            raise CurveParseError(f"unknown key {key!r}", no)
        if key in seen:
            raise CurveParseError(f"duplicate key {key!r}", no)
        if key == "genus":
            try:
                g = int(value)
            except ValueError:
                raise CurveParseError(f"genus must be an integer, got {value!r}", no) from None
            if g < 1:
                raise CurveParseError("genus must be >= 1", no)
            seen[key] = (g, no)
        else:
            try:
                lam = [parse_complex(p) for p in value.split(",")]
            except ValueError as e:
                raise CurveParseError(f"bad coefficient list: {e}", no) from None
            seen[key] = (lam, no)
    for key in ("genus", "lambda"):
        if key not in seen:
            raise CurveParseError(f"missing key {key!r}")
    g, _ = seen["genus"]
    lam, lno = seen["lambda"]
    if len(lam) != 2 * g + 2:
        raise CurveParseError(f"genus {g} needs {2 * g + 2} coefficients, got {len(lam)}", lno)
    try:
        return make_curve(lam)
    except CurveError as e:
        raise CurveParseError(str(e), lno) from None


def _load_curve(path):
    text = BUILTIN_CURVE if path is None else Path(path).read_text()
    return parse_curve_spec(text), hashlib.sha256(text.encode()).hexdigest()[:16]


def _header(curve_hash: str, seed) -> str:
    return f"# loopsoliton {__version__} curve={curve_hash} seed={seed}\n"


def _parse_divisor(curve, text: str):
    """Comma-separated points ``x`` (principal sheet) or ``x:y``."""
    pts = []
    for item in text.split(","):
        if ":" in item:
            x, y = item.split(":", 1)
            pts.append(CurvePoint(parse_complex(x), parse_complex(y)))
        else:
            pts.append(lift(curve, parse_complex(item)))
    return make_divisor(curve, pts)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("LOOPSOLITON_THREADS", "1")))
    except ValueError:
        return 1


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- periods

def cmd_periods(args) -> int:
    from .periods import compute_periods, legendre_residual

    curve, h = _load_curve(args.curve)
    p = compute_periods(curve, tol=args.tol)
    out = _out(args)
    g = curve.genus
    rows = []
    for name, m in (("omega1", p.omega1), ("omega2", p.omega2), ("eta1", p.eta1),
                    ("eta2", p.eta2), ("tau", p.tau)):
        for i in range(g):
            for j in range(g):
                rows.append(f"{name},{i + 1},{j + 1},{m[i, j].real:.17g},{m[i, j].imag:.17g}")
    (out / "periods.csv").write_text(_header(h, args.seed) + "block,i,j,re,im\n" + "\n".join(rows) + "\n")
    _, leg = legendre_residual(p)
    sym = float(np.max(np.abs(p.tau - p.tau.T)))
    eig = float(np.min(np.linalg.eigvalsh(0.5 * (p.tau.imag + p.tau.imag.T))))
    report = (
        _header(h, args.seed)
        + f"genus, {g}\n"
        + f"legendre_residual, {leg:.6e}\n"
        + f"tau_symmetry, {sym:.6e}\n"
        + f"im_tau_min_eigenvalue, {eig:.6e}\n"
        + f"beta_orientation, {p.beta_orientation}\n"
    )
    (out / "periods.report").write_text(report)
    sys.stdout.write(report)
    return 0


# ---------------------------------------------------------------- trace

def _svg(Z: np.ndarray) -> str:
    x, y = Z.real, -Z.imag
    lo_x, hi_x, lo_y, hi_y = x.min(), x.max(), y.min(), y.max()
    span = max(hi_x - lo_x, hi_y - lo_y, 1e-12)
    pad = 0.05 * span
    pts = " ".join(f"{a:.9g},{b:.9g}" for a, b in zip(x, y))
    return (
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{lo_x - pad:.9g} {lo_y - pad:.9g} {hi_x - lo_x + 2 * pad:.9g} {hi_y - lo_y + 2 * pad:.9g}">\n'
        f'<polyline fill="none" stroke="black" stroke-width="{span / 400:.6g}" points="{pts}"/>\n'
        "</svg>\n"
    )


def cmd_trace(args) -> int:
    from .dynamics import trace_soliton

    curve, h = _load_curve(args.curve)
    if args.divisor is None:
        raise InvalidDivisor("--divisor is required")
    d = _parse_divisor(curve, args.divisor)
    s0, s1 = (float(v) for v in args.range.split(","))
    n = 1 if s0 == s1 else args.samples
    smp = trace_soliton(curve, args.r, d, (s0, s1), n)
    out = _out(args)
    lines = [f"{s:.17g},{z.real:.17g},{z.imag:.17g},{q.real:.17g},{q.imag:.17g},{abs(dz):.17g}"
             for s, z, q, dz in zip(smp.s, smp.Z, smp.q, smp.dZ)]
    (out / "trace.csv").write_text(_header(h, args.seed) + "s,re_Z,im_Z,re_q,im_q,abs_dZ\n" + "\n".join(lines) + "\n")
    svg = _svg(smp.Z)
    (out / "trace.svg").write_text(svg.replace("<svg", "<!-- " + _header(h, args.seed).strip("# \n") + " -->\n<svg", 1))
    return 0


# ---------------------------------------------------------------- verify

def _suite_jobs(name, curve, ctx_holder, args):
    """List of zero-argument callables returning IdentityReports."""
    from . import loops, relations
    from .dynamics import mkdv_residual

    seed, n, N, r = args.seed, args.samples, args.N, args.r
    jobs = []

    def ctx():
        if "ctx" not in ctx_holder:
            from .kleinian import make_context
            ctx_holder["ctx"] = make_context(curve)
        return ctx_holder["ctx"]

    R = relations.IdentityReport
    if name == "periods":
        def periods_reports():
            from .periods import legendre_residual
            p = ctx().periods
            _, leg = legendre_residual(p)
            eig = float(np.min(np.linalg.eigvalsh(0.5 * (p.tau.imag + p.tau.imag.T))))
            return [
                R("legendre", [None], float(leg), 1e-8),
                R("tau_symmetry", [None], float(np.max(np.abs(p.tau - p.tau.T))), 1e-8),
                R("im_tau_positive", [None], max(0.0, -eig), 0.0),
            ]
        jobs.append(periods_reports)
    elif name == "schwarz":
        jobs.append(lambda: [relations.verify_schwarz_wp(ctx(), r, n, seed)])
        jobs.append(lambda: [relations.as_control(relations.verify_schwarz_wp(ctx(), r, n, seed, b_shift=1e-2), 1e-3)])
        jobs.append(lambda: [relations.verify_miura(ctx(), r, n, seed)])
        jobs.append(lambda: [relations.as_control(relations.verify_miura(ctx(), r, n, seed, b_shift=1e-2), 1e-3)])
    elif name == "identities":
        def series_reports():
            rng = np.random.default_rng(seed)
            try:
                d = relations._small_divisor(curve, r, rng, 0.3)
            except SeriesDiverges:
                return []
            return [relations.verify_log_series(curve, d, r, N), relations.verify_miura_series(curve, d, r, N)]

        def sum_report():
            try:
                return [relations.verify_sum_identity(ctx(), r, n, N, seed=seed)]
            except SeriesDiverges:
                return []

        def conj_reports():
            rng = np.random.default_rng(seed)
            good = relations.constrained_divisor(curve, r, rng)
            bad = relations.random_divisor(curve, rng)
            return [relations.verify_conjugation(curve, good, r),
                    relations.as_control(relations.verify_conjugation(curve, bad, r), 1e-3)]

        jobs += [series_reports, sum_report,
                 lambda: [relations.verify_diff_identity(ctx(), r, n, seed)],
                 lambda: [relations.verify_periodicity(ctx(), r, n, seed)],
                 lambda: [relations.as_control(relations.verify_periodicity(ctx(), r, n, seed, shift="half"), 1e-3)],
                 conj_reports]
    elif name == "mkdv":
        if curve.genus >= 2:
            def mkdv_reports():
                rng = np.random.default_rng(seed)
                d = relations.random_divisor(curve, rng)
                coarse = mkdv_residual(curve, r, d, ds=2e-3, n_s=21)
                fine = mkdv_residual(curve, r, d, ds=1e-3, n_s=21)
                return [R("mkdv", [d.xs], fine, 1e-4, {"ds": 1e-3, "dt": 1e-4}),
                        R("mkdv_order", [d.xs], abs(np.log2(coarse / fine) - 2), 0.5, {"ratio": coarse / fine})]
            jobs.append(mkdv_reports)
    elif name == "fourier":
        def fourier_reports():
            circ = loops.circle_loop()
            eight = loops.normalize_euclidean(loops.figure_eight_loop())[0]
            E = loops.loop_energy(eight)
            dec = max(loops.decimation_check(eight, p) for p in (2, 3, 5))
            wind = max(abs(loops.loop_energy(loops.wind(eight, k)) / (k * k * E) - 1) for k in (2, 3))
            return [
                R("circle_reality", [None], loops.reality_check(circ), 1e-12),
                R("figure_eight_reality", [None], loops.reality_check(eight), 1e-6),
                R("curvature_bilinear", [None], loops.curvature_coeffs(eight)[2], 1e-6),
                R("decimation", [2, 3, 5], dec, 1e-8),
                R("wind_energy", [2, 3], wind, 1e-9),
                R("circle_energy", [None], abs(loops.loop_energy(circ) - np.pi), 1e-10),
            ]
        jobs.append(fourier_reports)
    elif name == "partition":
        def partition_reports():
            grid = np.geomspace(0.1, 10, 9)
            gaps = [loops.partition_sum(1.0, b).max_rel_gap for b in grid]
            mod = []
            for b in grid:
                a, c = loops.partition_sum(1.0, b), loops.partition_sum(1.0, b + 2j * np.pi)
                mod.append(max(abs(a.value_direct - c.value_direct), abs(a.value_theta - c.value_theta),
                               abs(a.value_poisson - c.value_poisson)))
            return [R("partition_agreement", list(grid), max(gaps), 1e-12),
                    R("partition_modular", list(grid), max(mod), 1e-14)]
        jobs.append(partition_reports)
    return jobs


def cmd_verify(args) -> int:
    curve, h = _load_curve(args.curve)
    names = SUITES if args.suite == "all" else (args.suite,)
    holder = {}
    jobs = []
    for name in names:
        jobs += _suite_jobs(name, curve, holder, args)
    if jobs:
        # build the shared context once before fanning out
        if any(n in names for n in ("periods", "schwarz", "identities")):
            from .kleinian import make_context
            holder["ctx"] = make_context(curve, None)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(lambda job: job(), jobs))
    reports = [rep for group in results for rep in group]
    text = _header(h, args.seed) + "identity_id, n_samples, max_residual, tolerance, verdict\n"
    text += "".join(rep.line() + "\n" for rep in reports)
    out = _out(args)
    (out / "verify.report").write_text(text)
    sys.stdout.write(text)
    return 0 if all(rep.passed for rep in reports) else 1


# ---------------------------------------------------------------- eval

def cmd_eval(args) -> int:
    from .kleinian import al_sigma, make_context, sigma, wp_matrix, zeta_vector

    curve, h = _load_curve(args.curve)
    if args.u is None:
        raise ValueError("--u is required")
    u = np.array([parse_complex(v) for v in args.u.split(",")])
    if u.size != curve.genus:
        raise ValueError(f"--u needs {curve.genus} components")
    ctx = make_context(curve)
    lines = [_header(h, args.seed).rstrip("\n")]
    if args.fn in ("sigma", "all"):
        lines.append(f"sigma,{format_complex(sigma(ctx, u))}")
    if args.fn in ("zeta", "all"):
        lines += [f"zeta_{i + 1},{format_complex(z)}" for i, z in enumerate(zeta_vector(ctx, u))]
    if args.fn in ("wp", "all"):
        P = wp_matrix(ctx, u)
        lines += [f"wp_{i + 1}{j + 1},{format_complex(P[i, j])}" for i in range(curve.genus) for j in range(i, curve.genus)]
    if args.fn in ("al", "all"):
        lines.append(f"al_{args.r},{format_complex(al_sigma(ctx, u, args.r))}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------- loops

def _load_loop(spec: str, N: int):
    from . import loops
    from .dynamics import LoopSample

    if spec == "circle":
        return loops.circle_loop(N=max(1, min(N, 8)))
    if spec == "figure-eight":
        return loops.figure_eight_loop(N=N)
    rows = [ln for ln in Path(spec).read_text().splitlines() if ln and not ln.startswith("#")]
    data = np.array([[float(v) for v in ln.split(",")[:3]] for ln in rows[1:]])
    Z = data[:, 1] + 1j * data[:, 2]
    smp = LoopSample(data[:, 0], Z, np.zeros_like(Z), np.gradient(Z, data[:, 0]))
    return loops.fourier_coeffs(smp, N)


def _write_coeffs(path: Path, loop, header: str):
    body = "".join(f"{n},{a.real:.17g},{a.imag:.17g}\n" for n, a in zip(loop.n, loop.coeffs))
    path.write_text(header + "n,re_a,im_a\n" + body)


def cmd_fourier(args) -> int:
    from . import loops

    loop = _load_loop(args.loop, args.N)
    norm, a0, c, s0 = loops.normalize_euclidean(loop)
    out = _out(args)
    hdr = _header("none", args.seed)
    _write_coeffs(out / "fourier.csv", norm, hdr)
    report = (hdr + f"translation,{format_complex(a0)}\nphase,{format_complex(c)}\norigin_shift,{s0:.17g}\n"
              f"reality_residual,{loops.reality_check(norm):.6e}\nenergy,{loops.loop_energy(norm):.17g}\n")
    (out / "fourier.report").write_text(report)
    sys.stdout.write(report)
    return 0


def cmd_wind(args) -> int:
    from . import loops

    loop = loops.wind(_load_loop(args.loop, args.N), args.n)
    out = _out(args)
    _write_coeffs(out / "wind.csv", loop, _header("none", args.seed))
    sys.stdout.write(f"energy,{loops.loop_energy(loop):.17g}\n")
    return 0


def cmd_partition(args) -> int:
    from . import loops

    E = float(args.E) if args.E is not None else loops.elastica_energies()[0]
    betas = [parse_complex(b) for b in args.beta.split(",")]
    lines = []
    for b in betas:
        p = loops.partition_sum(E, b)
        lines.append(f"{format_complex(b)},{format_complex(p.value_direct)},{format_complex(p.value_theta)},"
                     f"{format_complex(p.value_poisson)},{p.max_rel_gap:.3e}")
    text = _header("none", args.seed) + f"# E = {E:.17g}\nbeta,direct,theta,poisson,max_rel_gap\n" + "\n".join(lines) + "\n"
    out = _out(args)
    (out / "partition.csv").write_text(text)
    sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------- entry

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="loopsoliton", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--curve", help="curve file (default: built-in genus-2 curve)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-14, help="quadrature tolerance")
    common.add_argument("--out", default=".")
    common.add_argument("--r", type=int, default=1, help="branch point index (1-based)")
    common.add_argument("--samples", type=int, default=8)
    common.add_argument("--N", type=int, default=40, help="series / Fourier truncation")
    sub = ap.add_subparsers(dest="cmd", required=True)
    sub.add_parser("periods", parents=[common])
    t = sub.add_parser("trace", parents=[common])
    t.add_argument("--divisor", help="x or x:y entries, comma-separated")
    t.add_argument("--range", default="0,1", help="s0,s1")
    v = sub.add_parser("verify", parents=[common])
    v.add_argument("--suite", default="all", choices=SUITES + ("all",))
    e = sub.add_parser("eval", parents=[common])
    e.add_argument("--u", help="u components, comma-separated")
    e.add_argument("--fn", default="all", choices=("sigma", "zeta", "wp", "al", "all"))
    f = sub.add_parser("fourier", parents=[common])
    f.add_argument("--loop", default="circle", help="circle, figure-eight or a trace CSV")
    w = sub.add_parser("wind", parents=[common])
    w.add_argument("--loop", default="circle")
    w.add_argument("--n", type=int, default=2)
    p = sub.add_parser("partition", parents=[common])
    p.add_argument("--E", type=float, default=None, help="energy (default: circle energy)")
    p.add_argument("--beta", default="0.1,1,10")
    return ap


COMMANDS = {
    "periods": cmd_periods,
    "trace": cmd_trace,
    "verify": cmd_verify,
    "eval": cmd_eval,
    "fourier": cmd_fourier,
    "wind": cmd_wind,
    "partition": cmd_partition,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except (CurveError, InvalidDivisor, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except QuadratureFailure as e:
        print(f"quadrature failure: {e}", file=sys.stderr)
        return 3
    except (StepCollapse, SpecialDivisor, PathThroughBranchPoint, OnThetaDivisor) as e:
        print(f"flow failure: {e}", file=sys.stderr)
        return 4
    except LoopSolitonError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
