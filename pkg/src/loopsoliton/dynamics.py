"""Divisor flows on the Jacobian, loop-soliton tracing and the MKdV check.

Jacobi inversion is done by integrating the divisor along straight lines in
u-space from a known divisor.  Moving u along a direction ``d`` moves the
points by

    dx_i = 2 y_i sum_k d_k L_ik,    dy_i = f'(x_i) sum_k d_k L_ik,

where ``L_ik`` is the coefficient of x^(k-1) in the Lagrange polynomial
prod_{j != i} (x - x_j) / (x_i - x_j).  Carrying y along with x keeps the
sheet continuous through branch points without any square roots.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .abel import abel_map, abel_point, half_period
from .curve import Divisor, CurvePoint, HyperellipticCurve, eval_df, eval_f
from .errors import SpecialDivisor, StepCollapse

__all__ = [
    "FlowState",
    "LoopSample",
    "abel_map",
    "abel_point",
    "half_period",
    "lagrange_matrix",
    "flow_field",
    "flow_field_matrix",
    "vector_field",
    "flow",
    "t_direction",
    "t_flow",
    "log_F_derivs",
    "trace_soliton",
    "zeta_form_discrepancy",
    "mkdv_residual",
    "mkdv_operator",
]

COND_CAP = 1e10


@dataclass(frozen=True)
class FlowState:
    xs: np.ndarray
    ys: np.ndarray
    u_disp: np.ndarray
    Z: complex = 0j

    @property
    def divisor(self) -> Divisor:
        return Divisor(tuple(CurvePoint(complex(x), complex(y)) for x, y in zip(self.xs, self.ys)))


@dataclass(frozen=True)
class LoopSample:
    """Sampled curve Z(s) with optional analytic log-derivatives of dZ/ds."""

    s: np.ndarray
    Z: np.ndarray
    q: np.ndarray
    dZ: np.ndarray
    dlog: np.ndarray | None = None   # d/ds log dZ
    d2log: np.ndarray | None = None  # d^2/ds^2 log dZ


def lagrange_matrix(xs) -> np.ndarray:
    """L[i, k] = coefficient of x^k in prod_{j != i} (x - x_j) / (x_i - x_j); equals V^{-1}."""
    xs = np.asarray(xs, dtype=complex)
    g = xs.size
    L = np.empty((g, g), dtype=complex)
    for i in range(g):
        others = np.delete(xs, i)
        denom = np.prod(xs[i] - others)
        if denom == 0:
            raise SpecialDivisor("coincident x-coordinates")
        L[i] = np.poly(others)[::-1] / denom if g > 1 else 1.0 / denom
    return L


def flow_field(curve: HyperellipticCurve, divisor: Divisor, k: int) -> np.ndarray:
    """dx_i/du_k in closed form (k is 1-based); for k = g this is 2 y_i / F'(x_i)."""
    L = lagrange_matrix(divisor.xs)
    return 2 * divisor.ys * L[:, k - 1]


def flow_field_matrix(curve: HyperellipticCurve, divisor: Divisor) -> np.ndarray:
    """dx_i/du_k by inverting M[k, i] = x_i^(k-1) / (2 y_i); returns [i, k]."""
    xs, ys = divisor.xs, divisor.ys
    g = xs.size
    M = (xs[None, :] ** np.arange(g)[:, None]) / (2 * ys[None, :])
    if np.linalg.cond(M) > COND_CAP:
        raise SpecialDivisor("Abel differential matrix is singular")
    return np.linalg.inv(M)


def vector_field(curve: HyperellipticCurve, xs, ys, direction) -> tuple:
    L = lagrange_matrix(xs)
    w = L @ np.asarray(direction, dtype=complex)
    return 2 * ys * w, eval_df(curve, xs) * w


def _rk4(curve, xs, ys, Z, direction, h, b_r):
    def rhs(x, y):
        dx, dy = vector_field(curve, x, y, direction)
        dz = np.prod(b_r - x) * direction[-1] if b_r is not None else 0j
        return dx, dy, dz

    k1 = rhs(xs, ys)
    k2 = rhs(xs + 0.5 * h * k1[0], ys + 0.5 * h * k1[1])
    k3 = rhs(xs + 0.5 * h * k2[0], ys + 0.5 * h * k2[1])
    k4 = rhs(xs + h * k3[0], ys + h * k3[1])
    nx = xs + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    ny = ys + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    nz = Z + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    return nx, ny, nz


def _project(curve, xs, ys):
    """Snap y back onto the curve, keeping the sheet nearest the integrated value."""
    root = np.sqrt(eval_f(curve, xs))
    return np.where(np.abs(root - ys) <= np.abs(root + ys), root, -root)


def _advance(curve, xs, ys, Z, direction, h, b_r, rtol, atol, depth=0):
    """One step of length h (complex) with step-doubling error control."""
    full = _rk4(curve, xs, ys, Z, direction, h, b_r)
    hx, hy, hz = _rk4(curve, xs, ys, Z, direction, h / 2, b_r)
    half = _rk4(curve, hx, hy, hz, direction, h / 2, b_r)
    scale = atol + rtol * np.max(np.abs(np.concatenate([xs, ys])))
    err = max(np.max(np.abs(full[0] - half[0])), np.max(np.abs(full[1] - half[1]))) / 15
    # arg(y) may flip legitimately where y passes through zero at a turning point
    big = np.minimum(np.abs(ys), np.abs(half[1])) > 1e-3 * (1 + np.max(np.abs(ys)))
    jump = np.max(np.abs(np.angle(half[1][big] / ys[big])), initial=0.0)
    if err <= scale and jump <= np.pi / 2:
        # Richardson extrapolation of the two RK4 results
        nx = half[0] + (half[0] - full[0]) / 15
        ny = half[1] + (half[1] - full[1]) / 15
        nz = half[2] + (half[2] - full[2]) / 15
        return nx, _project(curve, nx, ny), nz
    if depth > 40 or abs(h) < 1e-14:
        raise StepCollapse(f"step underflow near x={xs}")
    mx, my, mz = _advance(curve, xs, ys, Z, direction, h / 2, b_r, rtol, atol, depth + 1)
    return _advance(curve, mx, my, mz, direction, h / 2, b_r, rtol, atol, depth + 1)


def _direction(g: int, k) -> np.ndarray:
    if np.ndim(k) == 0:
        d = np.zeros(g, dtype=complex)
        d[int(k) - 1] = 1.0
        return d
    return np.asarray(k, dtype=complex)


def flow(curve: HyperellipticCurve, divisor: Divisor, k, delta_u: complex, steps: int = 16,
         b_r: complex | None = None, rtol: float = 1e-10, atol: float = 1e-12) -> list:
    """Trajectory of the divisor as u moves by ``delta_u`` along e_k (or a direction vector ``k``).

    Returns ``steps + 1`` FlowStates.  With ``b_r`` given, Z accumulates the
    integral of F(b_r) d(u_g).
    """
    g = curve.genus
    d = _direction(g, k)
    xs, ys, Z = divisor.xs.copy(), divisor.ys.copy(), 0j
    out = [FlowState(xs, ys, np.zeros(g, complex), Z)]
    h = complex(delta_u) / steps
    for n in range(1, steps + 1):
        if h != 0:
            xs, ys, Z = _advance(curve, xs, ys, Z, d, h, b_r, rtol, atol)
        out.append(FlowState(xs, ys, d * h * n, Z))
    return out


def t_direction(curve: HyperellipticCurve, r: int, form: str = "mkdv") -> np.ndarray:
    """Direction in u-space of the MKdV time for the loop at b_r.

    ``form="mkdv"`` gives -4 e_{g-1} + 2 (3 b_r + lambda_{2g}) e_g, the
    direction along which q = (1/2i) d/du_g log F(b_r) obeys
    q_t + 6 q^2 q_s + q_sss = 0 with s = u_g.  ``form="literal"`` gives
    e_{g-1} + (lambda_{2g-1} + b_r) e_g, kept for comparison only.
    """
    g = curve.genus
    if g < 2:
        raise ValueError("the t-direction needs genus >= 2")
    b = curve.branch_points[r - 1]
    d = np.zeros(g, dtype=complex)
    if form == "mkdv":
        d[g - 2] = -4.0
        d[g - 1] = 2 * (3 * b + curve.lam[2 * g])
    elif form == "literal":
        d[g - 2] = 1.0
        d[g - 1] = curve.lam[2 * g - 1] + b
    else:
        raise ValueError(f"unknown form {form!r}")
    return d


def t_flow(curve: HyperellipticCurve, divisor: Divisor, r: int, delta_t: complex, steps: int = 16,
           form: str = "mkdv", **kw) -> list:
    d = t_direction(curve, r, form)
    return flow(curve, divisor, d, delta_t, steps, **kw)


def log_F_derivs(curve: HyperellipticCurve, xs, ys, b: complex) -> tuple:
    """d/du_g log F(b) and d^2/du_g^2 log F(b) by the chain rule through the flow."""
    xs = np.asarray(xs, dtype=complex)
    ys = np.asarray(ys, dtype=complex)
    g = xs.size
    P = np.array([np.prod(xs[i] - np.delete(xs, i)) for i in range(g)])
    xp = 2 * ys / P
    yp = eval_df(curve, xs) / P
    dP = np.array([P[i] * np.sum((xp[i] - np.delete(xp, i)) / (xs[i] - np.delete(xs, i))) for i in range(g)])
    xpp = 2 * yp / P - 2 * ys * dP / P ** 2
    w = b - xs
    v = -np.sum(xp / w)
    vp = -np.sum(xpp / w + xp ** 2 / w ** 2)
    return complex(v), complex(vp)


def trace_soliton(curve: HyperellipticCurve, r: int, divisor0: Divisor, s_range: tuple,
                  n_samples: int, substeps: int = 4) -> LoopSample:
    """Integrate dZ/du_g = F(b_r) along real u_g from ``s_range[0]`` to ``s_range[1]``.

    The divisor is first flowed from ``divisor0`` (taken at s = 0) to the
    start of the range.  Z is normalised to Z(s_0) = 0.
    """
    b = curve.branch_points[r - 1]
    g = curve.genus
    s0, s1 = map(float, s_range)
    if s0 != 0:
        start = flow(curve, divisor0, g, s0, steps=max(1, int(abs(s0) * 64)))[-1]
        xs, ys = start.xs, start.ys
    else:
        xs, ys = divisor0.xs, divisor0.ys
    n = max(int(n_samples), 1)
    s = np.linspace(s0, s1, n) if n > 1 else np.array([s0])
    Zs = np.zeros(n, complex)
    dZ = np.zeros(n, complex)
    v = np.zeros(n, complex)
    vp = np.zeros(n, complex)
    d = _direction(g, g)
    Z = 0j
    for i in range(n):
        if i > 0:
            h = (s[i] - s[i - 1]) / substeps
            for _ in range(substeps):
                xs, ys, Z = _advance(curve, xs, ys, Z, d, h, b, 1e-10, 1e-12)
        Zs[i] = Z
        dZ[i] = np.prod(b - xs)
        v[i], vp[i] = log_F_derivs(curve, xs, ys, b)
    return LoopSample(s, Zs, v / 2j, dZ, v, vp)


def zeta_form_discrepancy(ctx, r: int, divisor0: Divisor, sample: LoopSample) -> dict:
    """Compare the traced Z with b^g u_g + sum_i b^(i-1) zeta_i(u) up to an affine map.

    The map a*W + c is fitted on the first and last samples and checked on
    all of them.
    """
    from .kleinian import zeta_vector

    curve = ctx.curve
    g = curve.genus
    b = curve.branch_points[r - 1]
    u0 = abel_map(curve, divisor0)
    W = []
    for s in sample.s:
        u = u0.copy()
        u[g - 1] += s
        W.append(b ** g * u[g - 1] + np.sum(b ** np.arange(g) * zeta_vector(ctx, u)))
    W = np.array(W)
    if W.size < 2:
        return {"scale": 1.0 + 0j, "shift": sample.Z[0] - W[0], "max_residual": 0.0}
    a = (sample.Z[-1] - sample.Z[0]) / (W[-1] - W[0])
    c = sample.Z[0] - a * W[0]
    res = np.abs(sample.Z - (a * W + c))
    return {"scale": complex(a), "shift": complex(c), "max_residual": float(res.max())}


def mkdv_operator(q: np.ndarray, ds: float, dt: float) -> np.ndarray:
    """q_t + 6 q^2 q_s + q_sss on a (3, n) grid of t-slices by centred differences.

    Returns values on interior s-points of the middle slice.
    """
    q = np.asarray(q)
    qm = q[1]
    qt = (q[2] - q[0]) / (2 * dt)
    qs = (qm[2:] - qm[:-2]) / (2 * ds)
    qsss = (qm[4:] - 2 * qm[3:-1] + 2 * qm[1:-3] - qm[:-4]) / (2 * ds ** 3)
    return qt[2:-2] + 6 * qm[2:-2] ** 2 * qs[1:-1] + qsss


def mkdv_residual(curve: HyperellipticCurve, r: int, divisor0: Divisor, ds: float = 1e-3,
                  dt: float = 1e-4, n_s: int = 41, form: str = "mkdv") -> float:
    """max |q_t + 6 q^2 q_s + q_sss| with q = (1/2i) d/ds log F(b_r).

    Three t-slices come from t_flow of ``divisor0`` by -dt, 0, +dt; on each
    the u_g-flow samples q on ``n_s`` points spaced ``ds``.
    """
    if curve.genus < 2:
        raise ValueError("MKdV check needs genus >= 2")
    qs = []
    half = (n_s - 1) / 2 * ds
    for sgn in (-1, 0, 1):
        start = t_flow(curve, divisor0, r, sgn * dt, steps=4, form=form)[-1].divisor if sgn else divisor0
        smp = trace_soliton(curve, r, start, (-half, half), n_s, substeps=1)
        qs.append(smp.q)
    return float(np.max(np.abs(mkdv_operator(np.array(qs), ds, dt))))
