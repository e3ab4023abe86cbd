"""Abel map from the point at infinity by path integration.

A path to ``P = (x_P, y_P)`` has at most two legs:

1. the radial ray from infinity to ``x_m``, integrated in the local
   parameter ``t = x**-1/2`` where ``du_k = -t**(2(g-k)) dt / s(t)`` and
   ``s(t) = prod_j sqrt(1 - b_j t**2)`` is smooth with ``s(0) = 1``;
2. the straight segment from ``x_m`` to ``x_P``, with
   ``y = y_m prod_j sqrt(1 + tau c_j)``.

Each principal square-root factor moves along a straight line starting at
1, so it never crosses its branch cut unless the path runs through a branch
point; that is the only continuity requirement.  An endpoint that is a
branch point gives an inverse square-root singularity, removed by the
substitution ``tau = 1 - (1 - s)**2``.
"""
from __future__ import annotations

import numpy as np

from .curve import CurvePoint, Divisor, HyperellipticCurve
from .errors import PathThroughBranchPoint, QuadratureFailure

__all__ = ["abel_point", "abel_map", "half_period"]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_MAX_NODES = 2 ** 16


def _adaptive(func, tol: float) -> np.ndarray:
    """Composite Gauss-Legendre on [0, 1] with bisection where needed."""
    used = 0

    def rule(a, b):
        x = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
        return 0.5 * (b - a) * (_GL_WEIGHTS[:, None] * func(x)).sum(axis=0)

    stack = [(0.0, 1.0, rule(0.0, 1.0))]
    total = 0
    while stack:
        a, b, whole = stack.pop()
        m = 0.5 * (a + b)
        left, right = rule(a, m), rule(m, b)
        used += 2 * _GL_NODES.size
        if used > _MAX_NODES:
            raise QuadratureFailure("Abel-map quadrature exceeded node budget")
        if np.max(np.abs(left + right - whole)) <= tol * max(1.0, b - a) or b - a < 1e-6:
            total = total + left + right
        else:
            stack.append((a, m, left))
            stack.append((m, b, right))
    return total


def _factors(base: np.ndarray, slope: np.ndarray, om2: np.ndarray):
    """prod_j sqrt(base_j + slope_j * om2) / (1 - sigma), one singular factor allowed.

    ``om2 = (1 - sigma)**2``.  A factor with ``base_j == 0`` vanishes at the
    endpoint like ``(1 - sigma)``; it is divided out exactly instead of
    numerically.  Returns (product, has_singular_factor).
    """
    sing = np.abs(base) < 1e-13
    prod = np.ones(om2.size, dtype=complex)
    for j in np.flatnonzero(~sing):
        prod = prod * np.sqrt(base[j] + slope[j] * om2)
    for j in np.flatnonzero(sing):
        prod = prod * np.sqrt(slope[j])
    return prod, bool(sing.any())


def _ray_integral(curve: HyperellipticCurve, t_end: complex, tol: float) -> np.ndarray:
    g = curve.genus
    b = curve.branch_points
    powers = 2 * (g - np.arange(1, g + 1))
    bt2 = b * t_end * t_end
    base = 1 - bt2

    def integrand(sig):
        om = 1 - sig
        tau = 1 - om * om
        t = tau * t_end
        # 1 - b t^2 = base + b t_end^2 (1 - tau^2),  1 - tau^2 = om^2 (1 + tau)
        slope = [bt2[j] * (1 + tau) for j in range(b.size)]
        s, singular = _factors(base, np.array(slope), om * om)
        jac = 2 * t_end * (np.ones_like(om) if singular else om)
        return -(t[:, None] ** powers[None, :]) / s[:, None] * jac[:, None]

    return _adaptive(integrand, tol)


def _ray_y(curve: HyperellipticCurve, t: complex) -> complex:
    s = np.prod(np.sqrt(1 - curve.branch_points * t * t))
    return complex(t ** (-(2 * curve.genus + 1)) * s)


def _segment_integral(curve: HyperellipticCurve, x0: complex, y0: complex, x1: complex, tol: float) -> np.ndarray:
    g = curve.genus
    c = (x1 - x0) / (x0 - curve.branch_points)
    base = 1 + c

    def integrand(sig):
        om = 1 - sig
        tau = 1 - om * om
        x = x0 + tau * (x1 - x0)
        # 1 + tau c = base - om^2 c
        slope = np.array([np.full(om.size, -cj) for cj in c])
        s, singular = _factors(base, slope, om * om)
        jac = 2 * (x1 - x0) * (np.ones_like(om) if singular else om)
        return (x[:, None] ** np.arange(g)[None, :]) / (2 * y0 * s)[:, None] * jac[:, None]

    return _adaptive(integrand, tol)


def _segment_end_y(curve: HyperellipticCurve, x0: complex, y0: complex, x1: complex) -> complex:
    c = (x1 - x0) / (x0 - curve.branch_points)
    return complex(y0 * np.prod(np.sqrt(1 + c)))


def _dist_to_ray(b, xm):
    r = np.maximum((b * np.conj(xm)).real / abs(xm) ** 2, 1.0)
    return np.abs(b - xm * r)


def _dist_to_segment(b, x0, x1):
    d = x1 - x0
    r = np.clip(((b - x0) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return np.abs(b - (x0 + r * d))


def _choose_via(curve: HyperellipticCurve, x: complex) -> complex:
    b = curve.branch_points
    scale = 1.0 + np.abs(b).max()
    margin = 1e-3 * scale
    others = b[np.abs(b - x) > 1e-12 * scale]
    if abs(x) > margin and (others.size == 0 or _dist_to_ray(others, x).min() > 0.05 * scale):
        return x
    gap = np.abs(others - x).min() if others.size else scale
    best, best_clear = None, -1.0
    for rho in (0.5 * gap, 0.25 * gap, 1.0 * scale):
        for k in range(16):
            xm = x + rho * np.exp(2j * np.pi * (k + 0.5) / 16)
            if abs(xm) < margin:
                continue
            clear = min(_dist_to_ray(b, xm).min(), _dist_to_segment(others, xm, x).min() if others.size else scale)
            if clear > best_clear:
                best, best_clear = xm, clear
    if best is None or best_clear < margin:
        raise PathThroughBranchPoint(f"no admissible path from infinity to x={x}")
    return best


def abel_point(curve: HyperellipticCurve, point: CurvePoint, via: complex | None = None,
               tol: float = 1e-14) -> tuple:
    """Integral of (du_1, ..., du_g) from infinity to ``point``.

    Returns ``(u, path)`` where ``path`` names the legs used.  ``via``
    forces the intermediate point of the two-leg path.
    """
    x, y = complex(point.x), complex(point.y)
    xm = _choose_via(curve, x) if via is None else complex(via)
    if xm == 0:
        raise PathThroughBranchPoint("intermediate point may not be 0")
    t0 = xm ** -0.5
    if xm == x:
        cands = [(sgn * t0, _ray_y(curve, sgn * t0)) for sgn in (1, -1)]
        t_end, _ = min(cands, key=lambda c: abs(c[1] - y))
        return _ray_integral(curve, t_end, tol), f"ray inf->{x:.6g}"
    b = curve.branch_points
    if (np.abs(b - x) > 1e-12).all() and _dist_to_segment(b, xm, x).min() < 1e-12:
        raise PathThroughBranchPoint(f"segment {xm} -> {x} hits a branch point")
    best = None
    for sgn in (1, -1):
        tm = sgn * t0
        ym = _ray_y(curve, tm)
        yend = _segment_end_y(curve, xm, ym, x)
        if best is None or abs(yend - y) < best[0]:
            best = (abs(yend - y), tm, ym)
    _, tm, ym = best
    u = _ray_integral(curve, tm, tol) + _segment_integral(curve, xm, ym, x, tol)
    return u, f"ray inf->{xm:.6g}, segment ->{x:.6g}"


def abel_map(curve: HyperellipticCurve, divisor: Divisor, tol: float = 1e-14) -> np.ndarray:
    """Sum of the Abel integrals of the divisor points (defined modulo the period lattice)."""
    return sum(abel_point(curve, p, tol=tol)[0] for p in divisor.points)


def half_period(curve: HyperellipticCurve, r: int, tol: float = 1e-14) -> np.ndarray:
    """omega_r = integral from infinity to the branch point b_r (r is 1-based)."""
    b = curve.branch_points[r - 1]
    return abel_point(curve, CurvePoint(complex(b), 0j), tol=tol)[0]
