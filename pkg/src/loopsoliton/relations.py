"""Numerical checks of the loop-soliton identities.

Notation used throughout, for a branch point b and the divisor polynomial
F(x) = prod (x - x_i) of the Abel preimage of u:

    v   = d/du_g log F(b)                   (Z' = F(b), so v = Z''/Z')
    S   = v' - v^2 / 2                      (Schwarz derivative of Z in u_g)
    W   = 4 wp_gg(u) + 2 lambda_{2g} + 2 b

with the Miura relation v' + v^2 / 2 = W.  Each verify_* function returns an
IdentityReport whose samples come from a seeded generator.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .abel import abel_map
from .curve import CurvePoint, Divisor, HyperellipticCurve, eval_f, make_divisor, power_sums
from .dynamics import LoopSample, flow_field, log_F_derivs
from .errors import NotClosed, NotUnitSpeed, SeriesDiverges, ZeroSpeed
from .kleinian import SigmaContext, al_sigma, branch_period_coords, wp_matrix, zeta_vector

__all__ = [
    "IdentityReport",
    "as_control",
    "random_divisor",
    "constrained_divisor",
    "schwarz_of_trace",
    "schwarz_from_derivatives",
    "wp_form",
    "schwarz_at_shift",
    "verify_schwarz_wp",
    "verify_miura",
    "verify_log_series",
    "log_series_tail",
    "verify_miura_series",
    "verify_sum_identity",
    "verify_diff_identity",
    "verify_periodicity",
    "verify_conjugation",
    "energy",
    "energy_report",
    "reality_residual",
    "reality_sweep",
]


@dataclass
class IdentityReport:
    """Outcome of one identity check.

    For a negative control (``control=True``) the residual field holds the
    smallest residual seen and the check passes when it reaches the
    tolerance.
    """

    identity_id: str
    samples: list
    max_residual: float
    tolerance: float
    metadata: dict = field(default_factory=dict)
    control: bool = False

    @property
    def passed(self) -> bool:
        if self.control:
            return bool(self.max_residual >= self.tolerance)
        return bool(self.max_residual <= self.tolerance)

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{self.identity_id}, {self.n_samples}, {self.max_residual:.6e}, {self.tolerance:.1e}, {verdict}"


def _report(identity_id, samples, residuals, tol, **meta) -> IdentityReport:
    res = float(np.max(residuals)) if len(residuals) else 0.0
    meta["min_residual"] = float(np.min(residuals)) if len(residuals) else 0.0
    return IdentityReport(identity_id, list(samples), res, tol, meta)


def as_control(report: IdentityReport, threshold: float) -> IdentityReport:
    """Re-read a report as a negative control: every residual must be >= threshold."""
    low = report.metadata.get("min_residual", report.max_residual)
    return IdentityReport(report.identity_id + "_control", report.samples, low, threshold,
                          dict(report.metadata), control=True)


def random_divisor(curve: HyperellipticCurve, rng: np.random.Generator, radius: float = 1.0,
                   min_sep: float = 0.2) -> Divisor:
    """Divisor with complex-Gaussian x's kept ``min_sep`` away from branch points and each other."""
    g = curve.genus
    pts = []
    for _ in range(100000):
        if len(pts) == g:
            break
        x = complex(radius * rng.normal(), radius * rng.normal())
        sheet = 1 if rng.random() < 0.5 else -1
        if np.min(np.abs(curve.branch_points - x)) < min_sep:
            continue
        if any(abs(p.x - x) < min_sep for p in pts):
            continue
        pts.append(CurvePoint(x, sheet * complex(np.sqrt(eval_f(curve, x)))))
    else:
        raise RuntimeError("could not place a random divisor")
    return make_divisor(curve, pts)


def constrained_divisor(curve: HyperellipticCurve, r: int, rng: np.random.Generator,
                        radius: float = 0.8) -> Divisor:
    """Divisor with prod |x_i - b_r| = 1: g-1 free points, the last one radially rescaled."""
    b = curve.branch_points[r - 1]
    g = curve.genus
    for _ in range(1000):
        free = b + radius * (rng.normal(size=g - 1) + 1j * rng.normal(size=g - 1))
        prod = np.prod(np.abs(free - b)) if g > 1 else 1.0
        phase = np.exp(2j * np.pi * rng.random())
        last = b + phase / prod
        xs = np.append(free, last)
        sep = np.abs(xs[:, None] - curve.branch_points[None, :]).min()
        gaps = np.abs(xs[:, None] - xs[None, :]) + np.diag(np.full(g, np.inf))
        if sep > 0.05 and gaps.min() > 0.05:
            return make_divisor(curve, [CurvePoint(x, complex(np.sqrt(eval_f(curve, x)))) for x in xs])
    raise RuntimeError("could not build a constrained divisor")


def schwarz_from_derivatives(d1, d2, d3) -> np.ndarray:
    """{Z, s} = Z'''/Z' - 3/2 (Z''/Z')^2 from derivative arrays."""
    d1, d2, d3 = (np.asarray(a, dtype=complex) for a in (d1, d2, d3))
    if np.min(np.abs(d1)) < 1e-12:
        raise ZeroSpeed("dZ vanishes on a sample")
    w = d2 / d1
    return d3 / d1 - 1.5 * w * w


def schwarz_of_trace(sample: LoopSample) -> np.ndarray:
    """Schwarz derivative of Z in s along a traced sample.

    Uses the analytic log-derivatives carried by the trace when present,
    otherwise second-order finite differences of log dZ.
    """
    dZ = np.asarray(sample.dZ)
    if np.min(np.abs(dZ)) < 1e-12:
        raise ZeroSpeed("dZ vanishes on a sample")
    if sample.dlog is not None and sample.d2log is not None:
        return sample.d2log - 0.5 * sample.dlog ** 2
    w = np.gradient(np.log(dZ), sample.s, edge_order=2)
    return np.gradient(w, sample.s, edge_order=2) - 0.5 * w * w


def wp_form(ctx: SigmaContext, u, r: int) -> complex:
    """4 wp_gg(u) + 2 lambda_{2g} + 2 b_r."""
    g = ctx.genus
    return complex(4 * wp_matrix(ctx, u)[g - 1, g - 1] + 2 * ctx.curve.lam[2 * g] + 2 * ctx.curve.branch_points[r - 1])


def _v_sigma(ctx: SigmaContext, u, r: int) -> complex:
    """d/du_g log F(b_r) at u, from al_r^2 written with sigma."""
    g = ctx.genus
    w, eta = branch_period_coords(ctx, r)
    u = np.asarray(u, dtype=complex)
    return complex(2 * (eta[g - 1] + zeta_vector(ctx, u + w)[g - 1] - zeta_vector(ctx, u)[g - 1]))


def schwarz_at_shift(ctx: SigmaContext, u, r: int) -> complex:
    """{Z, u_g} at u + omega_r from sigma alone: W(u + omega_r) - v(u + omega_r)^2."""
    w, _ = branch_period_coords(ctx, r)
    uw = np.asarray(u, dtype=complex) + w
    v = _v_sigma(ctx, uw, r)
    return wp_form(ctx, uw, r) - v * v


def _trace_side(curve, divisor, r):
    b = curve.branch_points[r - 1]
    return log_F_derivs(curve, divisor.xs, divisor.ys, b)


def _samples(curve, rng, n):
    divs = [random_divisor(curve, rng) for _ in range(n)]
    return divs, [abel_map(curve, d) for d in divs]


def verify_schwarz_wp(ctx: SigmaContext, r: int, n_samples: int = 16, seed: int = 0,
                      tol: float = 1e-6, b_shift: complex = 0.0) -> IdentityReport:
    """{Z, u_g} (Schwarz derivative along the flow) against 4 wp_gg + 2 lambda_{2g} + 2 b_r.

    ``b_shift`` perturbs b_r on the wp side only (negative control).
    """
    rng = np.random.default_rng(seed)
    divs, us = _samples(ctx.curve, rng, n_samples)
    res = []
    for d, u in zip(divs, us):
        v, vp = _trace_side(ctx.curve, d, r)
        S = vp - 0.5 * v * v
        res.append(abs(S - wp_form(ctx, u, r) - 2 * b_shift))
    return _report("schwarz_wp", us, res, tol, seed=seed, r=r, b_shift=complex(b_shift))


def verify_miura(ctx: SigmaContext, r: int, n_samples: int = 16, seed: int = 0,
                 tol: float = 1e-6, b_shift: complex = 0.0) -> IdentityReport:
    """v' + v^2/2 against 4 wp_gg + 2 lambda_{2g} + 2 b_r, i.e. {Z, u_g} + v^2 = W."""
    rng = np.random.default_rng(seed)
    divs, us = _samples(ctx.curve, rng, n_samples)
    res = []
    for d, u in zip(divs, us):
        v, vp = _trace_side(ctx.curve, d, r)
        res.append(abs(vp + 0.5 * v * v - wp_form(ctx, u, r) - 2 * b_shift))
    return _report("miura_wp", us, res, tol, seed=seed, r=r, b_shift=complex(b_shift))


def log_series_tail(g: int, rho: float, N: int) -> float:
    return g * rho ** (N + 1) / ((N + 1) * (1 - rho))


def _rho(divisor, b):
    return float(np.max(np.abs(divisor.xs / b)))


def verify_log_series(curve: HyperellipticCurve, divisor: Divisor, r: int, N: int = 40,
                      tol: float = 1e-10) -> IdentityReport:
    """F(b_r) against b_r^g exp(-sum_{n<=N} q_n b_r^-n / n)."""
    b = curve.branch_points[r - 1]
    rho = _rho(divisor, b)
    if rho >= 1:
        raise SeriesDiverges(f"rho = {rho:.3g} >= 1")
    g = curve.genus
    q = power_sums(divisor, N)
    n = np.arange(1, N + 1)
    series = b ** g * np.exp(-np.sum(q * b ** (-n) / n))
    direct = np.prod(b - divisor.xs)
    return _report("log_series", [divisor.xs], [abs(series - direct)], tol, N=N, rho=rho,
                   tail_bound=log_series_tail(g, rho, N))


def _series_rate(curve, divisor, b, N):
    """sum_{n<=N} q_{n,g} b^-n / n with q_{n,g} = d/du_g sum x_i^n."""
    xs = divisor.xs
    xp = flow_field(curve, divisor, curve.genus)
    n = np.arange(1, N + 1)
    qng = (n[:, None] * xs[None, :] ** (n[:, None] - 1) * xp[None, :]).sum(axis=1)
    return complex(np.sum(qng * b ** (-n) / n))


def verify_miura_series(curve: HyperellipticCurve, divisor: Divisor, r: int, N: int = 40,
                        tol: float = 1e-9) -> IdentityReport:
    """The u_g-derivative of the log series equals -d/du_g log F(b_r)."""
    b = curve.branch_points[r - 1]
    rho = _rho(divisor, b)
    if rho >= 1:
        raise SeriesDiverges(f"rho = {rho:.3g} >= 1")
    v, _ = _trace_side(curve, divisor, r)
    res = abs(_series_rate(curve, divisor, b, N) + v)
    return _report("miura_series", [divisor.xs], [res], tol, N=N, rho=rho)


def _small_divisor(curve, r, rng, rho):
    """Random divisor with max |x_i / b_r| = rho."""
    b = curve.branch_points[r - 1]
    g = curve.genus
    if abs(b) < 1e-12:
        raise SeriesDiverges("series in 1/b_r is undefined at b_r = 0")
    for _ in range(10000):
        xs = rng.normal(size=g) + 1j * rng.normal(size=g)
        xs *= rho * abs(b) / np.max(np.abs(xs))
        if np.abs(xs[:, None] - curve.branch_points[None, :]).min() < 0.05:
            continue
        if g > 1 and (np.abs(xs[:, None] - xs[None, :]) + np.diag(np.full(g, np.inf))).min() < 0.05:
            continue
        sheets = np.where(rng.random(g) < 0.5, 1, -1)
        return make_divisor(curve, [CurvePoint(x, s * complex(np.sqrt(eval_f(curve, x)))) for x, s in zip(xs, sheets)])
    raise RuntimeError("could not place a divisor at the requested rho")


def verify_sum_identity(ctx: SigmaContext, r: int, n_samples: int = 8, N: int = 40, rho: float = 0.3,
                        seed: int = 0, tol: float = 1e-6) -> IdentityReport:
    """{Z(u + omega_r), u_g} + {Z(u), u_g} against -(sum q_{n,g} b_r^-n / n)^2.

    {Z(u)} comes from the flow, {Z(u + omega_r)} from sigma at the shifted
    argument.  Samples have max |x_i / b_r| = ``rho``.
    """
    curve = ctx.curve
    b = curve.branch_points[r - 1]
    rng = np.random.default_rng(seed)
    res, samples = [], []
    for _ in range(n_samples):
        d = _small_divisor(curve, r, rng, rho)
        u = abel_map(curve, d)
        v, vp = _trace_side(curve, d, r)
        lhs = schwarz_at_shift(ctx, u, r) + (vp - 0.5 * v * v)
        rhs = -_series_rate(curve, d, b, N) ** 2
        res.append(abs(lhs - rhs))
        samples.append(u)
    g = curve.genus
    return _report("sum_identity", samples, res, tol, seed=seed, r=r, N=N, rho=rho,
                   tail_bound=log_series_tail(g, rho, N))


def verify_diff_identity(ctx: SigmaContext, r: int, n_samples: int = 8, seed: int = 0,
                         tol: float = 1e-6, shift=None) -> IdentityReport:
    """1/2 ({Z(u + omega_r)} - {Z(u)}) against -d^2/du_g^2 log F(b_r).

    A second route, 2 wp_gg(u + omega_r) - 2 wp_gg(u), is compared with the
    same right-hand side; the report carries the gap between the two
    routes.  ``shift`` adds a fixed vector to every sigma argument (a
    lattice vector leaves the residual unchanged).
    """
    curve = ctx.curve
    g = curve.genus
    rng = np.random.default_rng(seed)
    divs, us = _samples(curve, rng, n_samples)
    w, _ = branch_period_coords(ctx, r)
    extra = np.zeros(g, complex) if shift is None else np.asarray(shift, dtype=complex)
    res, gap = [], []
    for d, u in zip(divs, us):
        u = u + extra
        v, vp = _trace_side(curve, d, r)
        lhs = 0.5 * (schwarz_at_shift(ctx, u, r) - (vp - 0.5 * v * v))
        wp_route = 2 * (wp_matrix(ctx, u + w)[g - 1, g - 1] - wp_matrix(ctx, u)[g - 1, g - 1])
        res.append(max(abs(lhs + vp), abs(wp_route + vp)))
        gap.append(abs(lhs - wp_route))
    return _report("diff_identity", us, res, tol, seed=seed, r=r, route_gap=float(max(gap)))


def verify_periodicity(ctx: SigmaContext, r: int, n_samples: int = 8, seed: int = 0,
                       tol: float = 1e-7, shift: str = "lattice") -> IdentityReport:
    """F(b_r) via al_r^2 is unchanged by every lattice generator 2 omega' e_i, 2 omega'' e_i.

    ``shift="half"`` uses omega_r instead (negative control: residual O(1)).
    """
    rng = np.random.default_rng(seed)
    g = ctx.genus
    _, us = _samples(ctx.curve, rng, n_samples)
    if shift == "lattice":
        shifts = list(ctx.periods.lattice_basis.T)
    elif shift == "half":
        shifts = [branch_period_coords(ctx, r)[0]]
    else:
        raise ValueError(shift)
    res = []
    for u in us:
        base = al_sigma(ctx, u, r) ** 2
        for P in shifts:
            res.append(abs(al_sigma(ctx, u + P, r) ** 2 / base - 1))
    return _report("periodicity" if shift == "lattice" else "periodicity_half", us, res, tol,
                   seed=seed, r=r, n_shifts=len(shifts), genus=g)


def verify_conjugation(curve: HyperellipticCurve, divisor: Divisor, r: int, tol: float = 1e-12) -> IdentityReport:
    """conj(prod(b_r - x_i)) against the product with (x_i - b_r) replaced by 1/(x_i - b_r)."""
    b = curve.branch_points[r - 1]
    w = divisor.xs - b
    lhs = np.conj(np.prod(-w))
    rhs = np.prod(-1 / w)
    return _report("conjugation", [divisor.xs], [abs(lhs - rhs)], tol, r=r)


def _periodic_weights(s):
    s = np.asarray(s, dtype=float)
    h = np.diff(s)
    return s[-1] - s[0], h


def energy_report(sample: LoopSample, speed_tol: float = 1e-6, close_tol: float = 1e-6) -> tuple:
    """(energy, 2 * integral of q^2) over one period of a closed unit-speed sample.

    The sample covers one full period with both endpoints included.  The
    energy is the real part of the integral of the Schwarz derivative.
    """
    speed = np.abs(sample.dZ)
    if np.max(np.abs(speed - 1)) > speed_tol:
        raise NotUnitSpeed(f"max | |dZ| - 1 | = {np.max(np.abs(speed - 1)):.3g}")
    L, h = _periodic_weights(sample.s)
    if abs(sample.Z[-1] - sample.Z[0]) > close_tol * max(1.0, L):
        raise NotClosed(f"endpoint gap {abs(sample.Z[-1] - sample.Z[0]):.3g}")
    S = schwarz_of_trace(sample)
    trap = lambda y: float(np.sum(0.5 * h * (y[1:] + y[:-1])).real)
    return trap(S.real), trap(2 * np.abs(sample.q) ** 2)


def energy(sample: LoopSample, **kw) -> float:
    return energy_report(sample, **kw)[0]


def reality_residual(curve: HyperellipticCurve, divisor: Divisor, r: int) -> tuple:
    """(| |F(b_r)| - 1 |, max_i |Im dx_i/du_g| / max(1, |dx_i/du_g|)).

    The second entry vanishes when a real u_g step keeps every x_i real.
    """
    b = curve.branch_points[r - 1]
    first = abs(abs(np.prod(b - divisor.xs)) - 1)
    xp = flow_field(curve, divisor, curve.genus)
    second = float(np.max(np.abs(xp.imag) / np.maximum(1.0, np.abs(xp))))
    return float(first), second


def reality_sweep(curve: HyperellipticCurve, divisor: Divisor, r: int, lo: float = 1e-3,
                  hi: float = 1e3) -> tuple:
    """Scale every x_i - b_r by rho and bisect on rho for |F(b_r)| = 1.

    Returns (rho, scaled divisor, first reality residual).
    """
    b = curve.branch_points[r - 1]
    w = divisor.xs - b
    fn = lambda t: np.sum(np.log(np.abs(np.exp(t) * w)))
    t = brentq(fn, np.log(lo), np.log(hi), xtol=1e-15)
    xs = b + np.exp(t) * w
    d = make_divisor(curve, [CurvePoint(x, complex(np.sqrt(eval_f(curve, x)))) for x in xs])
    return float(np.exp(t)), d, reality_residual(curve, d, r)[0]
