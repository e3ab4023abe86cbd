"""Hyperelliptic curves y^2 = f(x) with monic f of odd degree 2g+1.

Coefficient lists are ascending: ``lam[k]`` multiplies ``x**k`` and
``lam[2g+1] == 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadLeadingCoefficient, DegenerateCurve, InvalidDivisor

__all__ = [
    "HyperellipticCurve",
    "CurvePoint",
    "Divisor",
    "make_curve",
    "curve_from_roots",
    "eval_f",
    "eval_df",
    "lift",
    "make_divisor",
    "F_poly",
    "power_sums",
    "elementary_symmetric",
    "newton_power_sums",
]

SEPARATION_RTOL = 1e-8


@dataclass(frozen=True)
class HyperellipticCurve:
    genus: int
    lam: np.ndarray = field(repr=False)
    branch_points: np.ndarray

    @property
    def degree(self) -> int:
        return 2 * self.genus + 1

    def f(self, x):
        return eval_f(self, x)

    def df(self, x):
        return eval_df(self, x)


@dataclass(frozen=True)
class CurvePoint:
    x: complex
    y: complex


@dataclass(frozen=True)
class Divisor:
    """Unordered set of g finite points on the curve (stored in given order)."""

    points: tuple

    @property
    def xs(self) -> np.ndarray:
        return np.array([p.x for p in self.points], dtype=complex)

    @property
    def ys(self) -> np.ndarray:
        return np.array([p.y for p in self.points], dtype=complex)

    def __len__(self):
        return len(self.points)


def _polish(coeffs_desc: np.ndarray, r: complex, iters: int = 4) -> complex:
    d = np.polyder(coeffs_desc)
    for _ in range(iters):
        fr = np.polyval(coeffs_desc, r)
        dr = np.polyval(d, r)
        if dr == 0:
            break
        step = fr / dr
        r = r - step
        if abs(step) <= 1e-16 * (1 + abs(r)):
            break
    return complex(r)


def _sort_key(z: complex):
    return (round(z.real, 12), round(z.imag, 12))


def make_curve(lam: Sequence[complex], separation_rtol: float = SEPARATION_RTOL) -> HyperellipticCurve:
    """Build a curve from ascending coefficients ``lam`` (length 2g+2).

    Branch points come from companion-matrix eigenvalues (``numpy.roots``)
    followed by Newton polishing, sorted lexicographically by (Re, Im).
    """
    lam = np.asarray(lam, dtype=complex)
    n = lam.size
    if n < 4 or n % 2 != 0:
        raise ValueError(f"need 2g+2 coefficients with g >= 1, got {n}")
    if lam[-1] != 1:
        raise BadLeadingCoefficient(f"leading coefficient must be 1, got {lam[-1]}")
    g = (n - 2) // 2
    desc = lam[::-1]
    roots = [_polish(desc, r) for r in np.roots(desc)]
    roots = np.array(sorted(roots, key=_sort_key), dtype=complex)
    scale = 1.0 + np.max(np.abs(roots))
    sep = separation_rtol * scale
    diffs = np.abs(roots[:, None] - roots[None, :]) + np.diag(np.full(roots.size, np.inf))
    if diffs.min() <= sep:
        raise DegenerateCurve(f"branch points closer than {sep:.3g}: {roots}")
    # snap rounding noise on real roots of real polynomials
    if np.all(lam.imag == 0):
        roots = np.where(np.abs(roots.imag) < 1e-14 * scale, roots.real + 0j, roots)
    curve = HyperellipticCurve(g, lam, roots)
    _check_expansion(curve)
    return curve


def curve_from_roots(roots: Sequence[complex]) -> HyperellipticCurve:
    """Curve with prescribed (distinct) branch points."""
    lam = np.poly(np.asarray(roots, dtype=complex))[::-1]
    lam[-1] = 1
    return make_curve(lam)


def _check_expansion(curve: HyperellipticCurve) -> None:
    g = curve.genus
    probes = np.exp(2j * np.pi * np.arange(g + 2) / (g + 2)) * (1.5 + np.abs(curve.branch_points).max())
    direct = eval_f(curve, probes)
    product = np.prod(probes[:, None] - curve.branch_points[None, :], axis=1)
    err = np.abs(direct - product) / np.maximum(np.abs(direct), 1e-300)
    if err.max() > 1e-10:
        raise DegenerateCurve(f"root expansion mismatch {err.max():.2e}")


def eval_f(curve: HyperellipticCurve, x):
    """Horner evaluation of f."""
    x = np.asarray(x, dtype=complex)
    acc = np.zeros_like(x)
    for c in curve.lam[::-1]:
        acc = acc * x + c
    return acc if acc.ndim else complex(acc)


def eval_df(curve: HyperellipticCurve, x):
    x = np.asarray(x, dtype=complex)
    k = np.arange(1, curve.lam.size)
    dl = curve.lam[1:] * k
    acc = np.zeros_like(x)
    for c in dl[::-1]:
        acc = acc * x + c
    return acc if acc.ndim else complex(acc)


def lift(curve: HyperellipticCurve, x: complex, sheet: int = 1) -> CurvePoint:
    """Point above ``x`` with y = sheet * principal sqrt(f(x))."""
    if sheet not in (1, -1):
        raise ValueError("sheet must be +1 or -1")
    x = complex(x)
    return CurvePoint(x, sheet * complex(np.sqrt(eval_f(curve, x))))


def make_divisor(curve: HyperellipticCurve, points, tol: float = 1e-9, collision_tol: float = 1e-9) -> Divisor:
    """Validate ``points`` (CurvePoints or (x, y) pairs) as a non-special divisor."""
    pts = tuple(p if isinstance(p, CurvePoint) else CurvePoint(complex(p[0]), complex(p[1])) for p in points)
    if len(pts) != curve.genus:
        raise InvalidDivisor(f"divisor needs {curve.genus} points, got {len(pts)}")
    for p in pts:
        fx = eval_f(curve, p.x)
        if abs(p.y * p.y - fx) > tol * (1 + abs(fx)):
            raise InvalidDivisor(f"point {p} is not on the curve")
    xs = np.array([p.x for p in pts])
    for i in range(len(xs)):
        for j in range(i):
            if abs(xs[i] - xs[j]) <= collision_tol * (1 + abs(xs[i])):
                raise InvalidDivisor(f"x-coordinates collide: {xs[i]} ~ {xs[j]}")
    return Divisor(pts)


def _xs(d) -> np.ndarray:
    if isinstance(d, Divisor):
        return d.xs
    return np.asarray(d, dtype=complex)


def F_poly(divisor) -> np.ndarray:
    """Ascending coefficients of F(x) = prod (x - x_i); monic of degree g."""
    return np.poly(_xs(divisor))[::-1].astype(complex)


def power_sums(divisor, N: int) -> np.ndarray:
    """q_n = sum_i x_i**n for n = 1..N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    xs = _xs(divisor)
    n = np.arange(1, N + 1)
    return (xs[None, :] ** n[:, None]).sum(axis=1)


def elementary_symmetric(divisor) -> np.ndarray:
    """e_1..e_g, read off F(x) = x^g - e_1 x^{g-1} + e_2 x^{g-2} - ..."""
    desc = np.poly(_xs(divisor)).astype(complex)
    g = desc.size - 1
    signs = (-1.0) ** np.arange(1, g + 1)
    return signs * desc[1:]


def newton_power_sums(e: Sequence[complex], N: int) -> np.ndarray:
    """Power sums q_1..q_N reconstructed from elementary symmetric e_1..e_g."""
    e = list(e)
    g = len(e)
    q = []
    for k in range(1, N + 1):
        s = 0j
        for i in range(1, min(k - 1, g) + 1):
            s += (-1) ** (i - 1) * e[i - 1] * q[k - i - 1]
        if k <= g:
            s += (-1) ** (k - 1) * k * e[k - 1]
        q.append(s)
    return np.array(q, dtype=complex)
