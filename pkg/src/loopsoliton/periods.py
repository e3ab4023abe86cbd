"""Period matrices and the Riemann theta function with characteristics.

Homology basis
--------------
Branch points are sorted by (Re, Im) and joined by the chain
``b1 -> b2 -> ... -> b_{2g+1} -> +inf``.  This polygonal chain is monotone
in the real part, hence simple, and ``y`` has a single-valued branch on its
complement.  Segments ``e_j = [b_j, b_{j+1}]`` with odd ``j`` are cuts, the
even ones are not.  With ``J_j`` the integral along ``e_j`` taken on the
left (upper) bank:

* ``alpha_i`` encircles cut ``e_{2i-1}``;    integral ``2 J_{2i-1}``
* ``beta_i``  runs from cut ``e_{2i-1}`` to the cut at infinity, passing
  through the intermediate cuts, and returns on the other sheet;
  integral ``2 sum_{k=i}^{g} J_{2k}`` (only the non-cut segments)

On each segment the substitution ``x = m + h cos(theta)`` cancels the two
square-root endpoint singularities, leaving a smooth integrand that the
midpoint (Gauss-Chebyshev) rule integrates with spectral accuracy.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import gammaincc, gamma

from .curve import HyperellipticCurve
from .errors import NonPositiveImTau, QuadratureFailure

__all__ = [
    "CycleSpec",
    "PeriodData",
    "ThetaChar",
    "homology_basis",
    "intersection_matrix",
    "differential_numerators",
    "segment_integral",
    "integrate_differential",
    "compute_periods",
    "legendre_residual",
    "theta",
    "theta_log_derivs",
    "theta_radius",
    "canonical_char",
]

MAX_NODES = 2 ** 16
GENUS_CAP = 4


@dataclass(frozen=True)
class CycleSpec:
    kind: str  # "alpha" | "beta"
    index: int  # 1..g
    segments: tuple  # chain segments j (1-based) summed with weight 2
    orientation: int = 1

    @property
    def path(self) -> str:
        if self.kind == "alpha":
            j = self.segments[0]
            return f"loop around cut [b{j}, b{j + 1}]"
        j0, j1 = self.segments[0], self.segments[-1]
        return f"b{j0} -> b{j1 + 1} across intermediate cuts, back on the other sheet"

    def reversed(self) -> "CycleSpec":
        return CycleSpec(self.kind, self.index, self.segments, -self.orientation)


def homology_basis(curve: HyperellipticCurve) -> list:
    g = curve.genus
    alphas = [CycleSpec("alpha", i, (2 * i - 1,)) for i in range(1, g + 1)]
    betas = [CycleSpec("beta", i, tuple(range(2 * i, 2 * g + 1, 2))) for i in range(1, g + 1)]
    return alphas + betas


def intersection_matrix(cycles: Sequence[CycleSpec]) -> np.ndarray:
    """Combinatorial intersection numbers of the chain cycles.

    ``beta_i`` leaves cut ``e_{2i-1}`` at its right end, crossing ``alpha_i``
    once; it passes straight through each later cut ``e_{2k-1}``, meeting
    ``alpha_k`` twice with opposite signs.  Betas can be pushed off each other.
    """
    n = len(cycles)
    m = np.zeros((n, n), dtype=int)
    for p, c1 in enumerate(cycles):
        for q, c2 in enumerate(cycles):
            if c1.kind == "alpha" and c2.kind == "beta" and c1.index == c2.index:
                m[p, q] = c1.orientation * c2.orientation
            elif c1.kind == "beta" and c2.kind == "alpha" and c1.index == c2.index:
                m[p, q] = -c1.orientation * c2.orientation
    return m


def differential_numerators(curve: HyperellipticCurve, kind: str) -> np.ndarray:
    """Rows of ascending numerator coefficients N_j(x), differential = N_j(x) dx / (2y)."""
    g = curve.genus
    lam = curve.lam
    rows = np.zeros((g, 2 * g + 1), dtype=complex)
    if kind == "first":
        for k in range(g):
            rows[k, k] = 1.0
    elif kind == "second":
        for j in range(1, g + 1):
            for k in range(j, 2 * g - j + 1):
                rows[j - 1, k] = (k + 1 - j) * lam[k + 1 + j]
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return rows


def _segment_integrand(curve: HyperellipticCurve, j: int, numerators: np.ndarray, theta_nodes: np.ndarray):
    b = curve.branch_points
    j0 = j - 1
    lo, hi = b[j0], b[j0 + 1]
    m, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
    x = m + h * np.cos(theta_nodes)
    q = np.ones_like(x)
    for k in range(b.size):
        if k < j0:
            q = q * np.sqrt(x - b[k])
        elif k > j0 + 1:
            q = q * (1j * np.sqrt(b[k] - x))
    powers = x[None, :] ** np.arange(numerators.shape[1])[:, None]
    vals = numerators @ powers  # (rows, nodes)
    return vals / (2j * q[None, :])


def segment_integral(curve: HyperellipticCurve, j: int, numerators: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Integral of N(x) dx/(2y) along chain segment ``e_j`` (upper bank), one value per row."""
    if not 1 <= j <= 2 * curve.genus:
        raise ValueError(f"segment index {j} out of range")
    n = 32
    prev = None
    while n <= MAX_NODES:
        th = (np.arange(n) + 0.5) * np.pi / n
        val = _segment_integrand(curve, j, numerators, th).sum(axis=1) * (np.pi / n)
        if prev is not None and np.max(np.abs(val - prev)) <= tol * (1 + np.max(np.abs(val))):
            return val
        prev = val
        n *= 2
    raise QuadratureFailure(f"segment {j} did not converge within {MAX_NODES} nodes")


def integrate_differential(curve: HyperellipticCurve, cycle: CycleSpec, kind: str, index: int,
                           tol: float = 1e-14) -> complex:
    """Integral of du_index (kind='first') or dr_index (kind='second') over ``cycle``."""
    g = curve.genus
    if not 1 <= index <= g:
        raise ValueError("index out of range")
    num = differential_numerators(curve, kind)[index - 1: index]
    total = sum(segment_integral(curve, j, num, tol)[0] for j in cycle.segments)
    return complex(2 * cycle.orientation * total)


@dataclass(frozen=True)
class PeriodData:
    omega1: np.ndarray  # omega'  = 1/2 alpha-integrals of du, [i, j] = du_i over alpha_j
    omega2: np.ndarray  # omega'' = 1/2 beta-integrals of du
    eta1: np.ndarray    # eta'    = 1/2 alpha-integrals of dr
    eta2: np.ndarray    # eta''   = 1/2 beta-integrals of dr
    tau: np.ndarray
    beta_orientation: int = 1

    @property
    def genus(self) -> int:
        return self.tau.shape[0]

    @property
    def lattice_basis(self) -> np.ndarray:
        """g x 2g complex matrix [2 omega' | 2 omega'']."""
        return np.hstack([2 * self.omega1, 2 * self.omega2])

    def lattice_coords(self, u) -> np.ndarray:
        """Real coordinates (m', m'') with u = 2 omega' m' + 2 omega'' m''."""
        L = self.lattice_basis
        A = np.vstack([L.real, L.imag])
        u = np.asarray(u, dtype=complex)
        return np.linalg.solve(A, np.concatenate([u.real, u.imag]))

    def lattice_residual(self, u) -> float:
        """Distance of lattice coordinates of ``u`` to the nearest integers."""
        c = self.lattice_coords(u)
        return float(np.max(np.abs(c - np.round(c))))

    def reduce(self, u) -> np.ndarray:
        """Representative of ``u`` modulo the lattice, coordinates in [-1/2, 1/2)."""
        c = self.lattice_coords(u)
        shift = np.round(c)
        return np.asarray(u, dtype=complex) - self.lattice_basis @ shift


def compute_periods(curve: HyperellipticCurve, tol: float = 1e-14, allow_high_genus: bool = False) -> PeriodData:
    g = curve.genus
    if g > GENUS_CAP and not allow_high_genus:
        raise ValueError(f"genus {g} exceeds cap {GENUS_CAP}; pass allow_high_genus=True")
    num = np.vstack([differential_numerators(curve, "first"), differential_numerators(curve, "second")])
    J = np.array([segment_integral(curve, j, num, tol) for j in range(1, 2 * g + 1)]).T  # rows: diffs
    Ja, Jr = J[:g], J[g:]
    w1 = np.empty((g, g), complex)
    w2 = np.empty((g, g), complex)
    e1 = np.empty((g, g), complex)
    e2 = np.empty((g, g), complex)
    for i in range(g):
        w1[:, i] = Ja[:, 2 * i]
        e1[:, i] = Jr[:, 2 * i]
        w2[:, i] = Ja[:, 2 * i + 1::2].sum(axis=1)
        e2[:, i] = Jr[:, 2 * i + 1::2].sum(axis=1)
    orientation = 1
    tau = np.linalg.solve(w1, w2)
    if not _is_pos_def(tau.imag):
        w2, e2, orientation = -w2, -e2, -1
        tau = -tau
        if not _is_pos_def(tau.imag):
            raise NonPositiveImTau("Im tau not positive definite for either beta orientation")
    return PeriodData(w1, w2, e1, e2, tau, orientation)


def _is_pos_def(m: np.ndarray) -> bool:
    sym = 0.5 * (m + m.T)
    return bool(np.all(np.linalg.eigvalsh(sym) > 0))


def legendre_residual(p: PeriodData) -> tuple:
    """Generalized Legendre relation eta'^T omega'' - omega'^T eta'' = s (pi i / 2) I.

    Returns ``(sign, residual)`` with the sign that fits best; the chain
    basis gives s = -1.
    """
    lhs = p.eta1.T @ p.omega2 - p.omega1.T @ p.eta2
    target = 0.5j * np.pi * np.eye(p.genus)
    rp = np.max(np.abs(lhs - target))
    rm = np.max(np.abs(lhs + target))
    return (1, float(rp)) if rp <= rm else (-1, float(rm))


# ---------------------------------------------------------------- theta


@dataclass(frozen=True)
class ThetaChar:
    a: tuple  # top characteristic, shifts the summation lattice
    b: tuple  # bottom characteristic, shifts the argument

    def __post_init__(self):
        if len(self.a) != len(self.b):
            raise ValueError("characteristic halves must have equal length")

    @classmethod
    def zero(cls, g: int) -> "ThetaChar":
        return cls((Fraction(0),) * g, (Fraction(0),) * g)

    @property
    def a_vec(self) -> np.ndarray:
        return np.array([float(x) for x in self.a])

    @property
    def b_vec(self) -> np.ndarray:
        return np.array([float(x) for x in self.b])

    def parity(self) -> int:
        """+1 for even, -1 for odd (half-integer characteristics)."""
        s = sum(4 * Fraction(x) * Fraction(y) for x, y in zip(self.a, self.b))
        return 1 if s % 2 == 0 else -1


def canonical_char(g: int) -> ThetaChar:
    """Characteristic [delta''; delta'] with delta'' = (1/2,...), delta' = (g/2, ..., 1/2)."""
    top = tuple(Fraction(1, 2) for _ in range(g))
    bottom = tuple(Fraction(g - k, 2) for k in range(g))
    return ThetaChar(top, bottom)


def _deconinck_bound(R: float, g: int, rho: float) -> float:
    x = (R - rho / 2) ** 2
    return 0.5 * g * (2 / rho) ** g * gammaincc(g / 2, x) * gamma(g / 2)


def theta_radius(tau: np.ndarray, tol: float, order: int = 0, center_norm: float = 0.0) -> float:
    """Ellipsoid radius (in the sqrt(pi Im tau) metric) whose tail is below ``tol``.

    The tail of the Gaussian lattice sum is bounded by the incomplete gamma
    estimate; ``order`` adds the polynomial factor of derivative sums.
    """
    Y = tau.imag
    g = Y.shape[0]
    lam_min = float(np.linalg.eigvalsh(np.pi * 0.5 * (Y + Y.T)).min())
    if lam_min <= 0:
        raise NonPositiveImTau("Im tau is not positive definite")
    rho = np.sqrt(lam_min)
    R = max(rho, 1.0)
    while True:
        poly = (2 * np.pi * (center_norm + 1 + R / rho)) ** order
        if R > rho / 2 and _deconinck_bound(R, g, rho) * poly <= tol:
            return R
        R *= 1.05


@lru_cache(maxsize=64)
def _ellipsoid_points(Y_bytes: bytes, g: int, R: float) -> np.ndarray:
    Y = np.frombuffer(Y_bytes, dtype=float).reshape(g, g)
    PY = np.pi * 0.5 * (Y + Y.T)
    # rounding the centre to an integer point moves it by at most 1/2 per axis
    margin = 0.5 * np.sqrt(np.abs(PY).sum())
    Rt = R + margin
    Pinv = np.linalg.inv(PY)
    bounds = [int(np.ceil(Rt * np.sqrt(Pinv[i, i]))) for i in range(g)]
    grids = np.meshgrid(*[np.arange(-b, b + 1) for b in bounds], indexing="ij")
    pts = np.stack([gr.ravel() for gr in grids], axis=1).astype(float)
    q = np.einsum("ni,ij,nj->n", pts, PY, pts)
    return pts[q <= Rt * Rt]


def _lattice(tau, z, char, tol, order, radius_scale=1.0):
    tau = np.asarray(tau, dtype=complex)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    g = tau.shape[0]
    if char is None:
        char = ThetaChar.zero(g)
    Y = np.ascontiguousarray(0.5 * (tau.imag + tau.imag.T))
    try:
        np.linalg.cholesky(Y)
    except np.linalg.LinAlgError as exc:
        raise NonPositiveImTau("Im tau is not positive definite") from exc
    a, b = char.a_vec, char.b_vec
    vstar = -np.linalg.solve(Y, z.imag)
    R = radius_scale * theta_radius(tau, tol, order, float(np.max(np.abs(vstar))))
    offsets = _ellipsoid_points(Y.tobytes(), g, round(R, 6))
    v = np.round(vstar - a)[None, :] + offsets + a[None, :]
    expo = 2j * np.pi * (0.5 * np.einsum("ni,ij,nj->n", v, tau, v) + v @ (z + b))
    return v, expo


def theta(z, tau, char: ThetaChar | None = None, tol: float = 1e-15, radius_scale: float = 1.0) -> complex:
    """Riemann theta with characteristics [a; b] at ``z``.

    Absolute truncation error is below ``tol`` times the largest term
    modulus, exp(pi Im z^T (Im tau)^{-1} Im z).  ``radius_scale`` enlarges
    the summation ellipsoid (for truncation checks).
    """
    _, expo = _lattice(tau, z, char, tol, 0, radius_scale)
    return complex(np.exp(expo).sum())


def theta_log_derivs(z, tau, char: ThetaChar | None = None, tol: float = 1e-15, order: int = 2,
                     with_shift: bool = False):
    """log theta, its gradient and Hessian in z, from term-wise differentiated sums.

    Terms are rescaled by the largest one before summation, so results stay
    finite for large Im z.  With ``with_shift`` the log-modulus of that
    largest term is appended; ``log|theta| - shift`` then measures
    cancellation in the sum.
    """
    v, expo = _lattice(tau, z, char, tol, order)
    shift = expo.real.max()
    w = np.exp(expo - shift)
    s0 = w.sum()
    out = [np.log(s0) + shift]
    k = 2j * np.pi
    if order >= 1:
        grad = k * (v * w[:, None]).sum(axis=0) / s0
        out.append(grad)
    if order >= 2:
        s2 = k * k * np.einsum("n,ni,nj->ij", w, v, v)
        out.append(s2 / s0 - np.outer(grad, grad))
    if with_shift:
        out.append(shift)
    return out[0] if len(out) == 1 else tuple(out)
