"""Fourier analysis of closed loops, winding, and the genus-0/1 partition sums.

Loops are stored by their coefficients a_n, n = -N..N, with

    Z(s) = sum_n a_n exp(2 pi i n s) / sqrt(2 pi),    s in [0, 1).

A unit-speed loop in this convention has length 1; energies are reported
for the same loop rescaled to length 2 pi, so the circle has energy pi.
"""
from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import ellipe, ellipj, ellipk

from .dynamics import LoopSample
from .errors import DivergentSum, NoConsistentPhase, NotClosed, NotPrime, ZeroSpeed

__all__ = [
    "FourierLoop",
    "PartitionResult",
    "fourier_coeffs",
    "evaluate",
    "to_sample",
    "normalize_euclidean",
    "reality_check",
    "curvature_coeffs",
    "wind",
    "decimation_check",
    "loop_energy",
    "squared_speed",
    "partition_sum",
    "circle_loop",
    "figure_eight_params",
    "figure_eight_loop",
    "elastica_energies",
    "CURVATURE_SIGN",
]

SQ2PI = np.sqrt(2 * np.pi)
# overall sign of the bilinear curvature formula, fixed on the circle
CURVATURE_SIGN = 1.0


@dataclass(frozen=True)
class FourierLoop:
    coeffs: np.ndarray  # a_{-N} .. a_N

    @property
    def N(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def n(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def a(self, k: int) -> complex:
        return complex(self.coeffs[k + self.N]) if abs(k) <= self.N else 0j


@dataclass(frozen=True)
class PartitionResult:
    beta: complex
    E_a: float
    value_direct: complex
    value_theta: complex
    value_poisson: complex

    @property
    def max_rel_gap(self) -> float:
        v = [self.value_direct, self.value_theta, self.value_poisson]
        scale = max(abs(x) for x in v)
        return max(abs(x - y) for x in v for y in v) / scale


def fourier_coeffs(sample: LoopSample, N: int = 256, close_tol: float = 1e-6) -> FourierLoop:
    """Coefficients of a closed sample on a uniform grid covering one period, endpoint included."""
    Z = np.asarray(sample.Z, dtype=complex)
    if abs(Z[-1] - Z[0]) > close_tol * max(1.0, np.max(np.abs(Z - Z[0]))):
        raise NotClosed(f"endpoint gap {abs(Z[-1] - Z[0]):.3g}")
    vals = Z[:-1]
    M = vals.size
    c = np.fft.fft(vals) / M * SQ2PI
    N = min(N, (M - 1) // 2)
    idx = np.arange(-N, N + 1)
    return FourierLoop(c[idx % M])


def evaluate(loop: FourierLoop, s, deriv: int = 0) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    w = (2j * np.pi * loop.n) ** deriv * loop.coeffs / SQ2PI
    return np.exp(2j * np.pi * np.multiply.outer(s, loop.n)) @ w


def _grid_values(loop: FourierLoop, M: int, deriv: int = 0) -> np.ndarray:
    """Values at s = j/M by inverse FFT (M > 2N)."""
    buf = np.zeros(M, dtype=complex)
    buf[loop.n % M] = (2j * np.pi * loop.n) ** deriv * loop.coeffs / SQ2PI
    return np.fft.ifft(buf) * M


def to_sample(loop: FourierLoop, M: int = 512) -> LoopSample:
    """Uniform sample over one period (endpoint included), with analytic log-derivatives."""
    M = max(M, 2 * loop.N + 2)
    s = np.arange(M + 1) / M
    Z, d1, d2, d3 = (np.append(v, v[0]) for v in (_grid_values(loop, M, k) for k in range(4)))
    w = d2 / d1
    return LoopSample(s, Z, w / 2j, d1, w, d3 / d1 - w * w)


def normalize_euclidean(loop: FourierLoop, tol: float = 1e-6) -> tuple:
    """Remove translation and rotation so that a_0 = 0 and a_n is real.

    Returns ``(normalized, a0, c, s0)`` where c is the unimodular phase with
    conj(a_n) = c a_n and s0 the shift of the parameter origin (0 unless
    the origin had to be moved to a mirror-symmetric point).
    """
    n = loop.n
    a = loop.coeffs.copy()
    a0 = loop.a(0)
    a[n == 0] = 0
    mask = n != 0
    if not np.any(np.abs(a[mask]) > 0):
        raise NoConsistentPhase("loop has no non-constant harmonics")

    def fit(shifted):
        am = shifted[mask]
        c = np.sum(np.conj(am) ** 2)
        c = c / abs(c) if abs(c) > 0 else 1.0
        res = np.max(np.abs(np.conj(am) - c * am)) / np.max(np.abs(am))
        return c, res

    def shifted(s0):
        return a * np.exp(2j * np.pi * n * s0)

    c, res = fit(a)
    s0 = 0.0
    if res > tol:
        grid = np.linspace(0, 1, 2048, endpoint=False)
        vals = [fit(shifted(t))[1] for t in grid]
        t0 = grid[int(np.argmin(vals))]
        opt = minimize_scalar(lambda t: fit(shifted(t))[1], bounds=(t0 - 1 / 2048, t0 + 1 / 2048),
                              method="bounded", options={"xatol": 1e-14})
        s0 = float(opt.x) % 1.0
        c, res = fit(shifted(s0))
        if res > tol:
            raise NoConsistentPhase(f"phase fit residual {res:.3g}")
    out = shifted(s0) * np.sqrt(c)
    return FourierLoop(out), a0, complex(c), s0


def reality_check(loop: FourierLoop) -> float:
    """max_n |2 pi sum_m m (n+m) a_m a_{n+m} - delta_{n0}| over the stored range."""
    N = loop.N
    worst = 0.0
    for k in range(-2 * N, 2 * N + 1):
        total = 0j
        for m in range(max(-N, -N - k), min(N, N - k) + 1):
            total += m * (k + m) * loop.a(m) * loop.a(k + m)
        worst = max(worst, abs(2 * np.pi * total - (1.0 if k == 0 else 0.0)))
    return worst


def curvature_coeffs(loop: FourierLoop, M: int | None = None) -> tuple:
    """Fourier coefficients of the curvature, by a bilinear sum and directly.

    Returns ``(bilinear, direct, max_gap)`` for harmonics -2N..2N.  The
    bilinear sum is 4 pi^2 sum_m (k+m)^2 m a_m a_{k+m}; the direct route
    transforms (1/i) d/ds log dZ/ds sampled on a fine grid.
    """
    N = loop.N
    ks = np.arange(-2 * N, 2 * N + 1)
    bil = np.zeros(ks.size, dtype=complex)
    for j, k in enumerate(ks):
        for m in range(max(-N, -N - k), min(N, N - k) + 1):
            bil[j] += (k + m) ** 2 * m * loop.a(m) * loop.a(k + m)
    bil *= CURVATURE_SIGN * 4 * np.pi ** 2
    M = M or 8 * (2 * N + 1)
    d1 = _grid_values(loop, M, 1)
    d2 = _grid_values(loop, M, 2)
    if np.min(np.abs(d1)) < 1e-12:
        raise ZeroSpeed("dZ vanishes on the grid")
    kappa = (d2 / d1) / 1j
    c = np.fft.fft(kappa) / M
    direct = c[ks % M]
    return bil, direct, float(np.max(np.abs(bil - direct)))


def wind(obj, n: int):
    """n-fold winding Z(s) -> Z(n s) / n, for a FourierLoop or a closed LoopSample."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(obj, LoopSample):
        M = obj.s.size - 1
        loop = fourier_coeffs(obj, N=(M - 1) // 2)
        return to_sample(wind(loop, n), M=M * n)
    N = obj.N
    out = np.zeros(2 * n * N + 1, dtype=complex)
    out[n * obj.n + n * N] = obj.coeffs / n
    return FourierLoop(out)


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, int(p ** 0.5) + 1))


def decimation_check(loop: FourierLoop, p: int, n: int = 1, n_grid: int = 64) -> float:
    """Residual of sum_j Z^(pn)((s+j)/p) = Z^(n)(s) and of p Z^(pn)(s) = Z^(n)(p s)."""
    if not _is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if n < 1:
        raise ValueError("n must be >= 1")
    s = np.arange(n_grid) / n_grid
    wpn, wn = wind(loop, p * n), wind(loop, n)
    lhs = sum(evaluate(wpn, (s + j) / p) for j in range(p))
    r1 = np.max(np.abs(lhs - evaluate(wn, s)))
    r2 = np.max(np.abs(p * evaluate(wpn, s) - evaluate(wn, p * s)))
    return float(max(r1, r2))


def squared_speed(loop: FourierLoop) -> float:
    """Integral of |dZ/ds|^2 over one period, spectrally."""
    return float(2 * np.pi * np.sum(loop.n ** 2 * np.abs(loop.coeffs) ** 2))


def loop_energy(loop: FourierLoop, M: int | None = None) -> float:
    """Half the integral of curvature squared, for the loop rescaled to length 2 pi."""
    M = M or 8 * (2 * loop.N + 1)
    d1 = _grid_values(loop, M, 1)
    d2 = _grid_values(loop, M, 2)
    speed = np.abs(d1)
    if speed.min() < 1e-12:
        raise ZeroSpeed("dZ vanishes on the grid")
    kappa = (np.conj(d1) * d2).imag / speed ** 3
    length = speed.mean()
    raw = 0.5 * np.mean(kappa ** 2 * speed)
    return float(raw * length / (2 * np.pi))


def circle_loop(N: int = 4) -> FourierLoop:
    """Unit-speed circle of length 1."""
    c = np.zeros(2 * N + 1, dtype=complex)
    c[N + 1] = 1 / SQ2PI
    return FourierLoop(c)


def figure_eight_params() -> tuple:
    """(k, K) for the figure-eight elastica: 2 E(k) = K(k), m = k^2."""
    m = brentq(lambda m: 2 * ellipe(m) - ellipk(m), 0.5, 0.9, xtol=1e-16)
    return float(np.sqrt(m)), float(ellipk(m))


def figure_eight_loop(N: int = 64, M: int = 4096) -> FourierLoop:
    """Unit-speed figure-eight elastica of length 1.

    Curvature 2 k alpha cn(alpha s, k) with alpha = 4K, tangent angle
    2 arcsin(k sn(alpha s, k)); Z follows by spectral integration of the
    unit tangent.
    """
    k, K = figure_eight_params()
    alpha = 4 * K
    s = np.arange(M) / M
    sn, cn, dn, _ = ellipj(alpha * s, k * k)
    tangent = (1 - 2 * k * k * sn ** 2) + 2j * k * sn * dn
    c = np.fft.fft(tangent) / M
    freq = np.fft.fftfreq(M, 1 / M)
    zc = np.zeros(M, dtype=complex)
    nz = freq != 0
    zc[nz] = c[nz] / (2j * np.pi * freq[nz])
    idx = np.arange(-N, N + 1)
    return FourierLoop(zc[idx % M] * SQ2PI)


def elastica_energies(N: int = 64) -> tuple:
    """(E_0, E_1): circle and figure-eight energies at length 2 pi."""
    return loop_energy(circle_loop()), loop_energy(figure_eight_loop(N))


def partition_sum(E_a: float, beta: complex, mode: str = "all") -> PartitionResult:
    """sum_{n>=1} exp(-beta n^2 E_a) three ways.

    direct:  the series itself;
    theta:   (theta3(0, q) - 1) / 2 with q = exp(-beta E_a);
    poisson: the modular transform
             sqrt(pi/x)/2 - 1/2 + sqrt(pi/x) sum_{n>=1} exp(-pi^2 n^2 / x),  x = beta E_a.

    The theta and Poisson forms are evaluated in 40-digit arithmetic so the
    cancellation at large x does not limit the agreement.
    """
    x = complex(beta) * E_a
    if x.real <= 0:
        raise DivergentSum(f"Re(beta E) = {x.real:.3g} <= 0")
    direct = _direct(x) if mode in ("all", "direct") else complex("nan")
    theta = _theta(x) if mode in ("all", "theta") else complex("nan")
    poisson = _poisson(x) if mode in ("all", "poisson") else complex("nan")
    return PartitionResult(complex(beta), float(E_a), direct, theta, poisson)


def _direct(x: complex) -> complex:
    total = 0j
    n = 1
    while True:
        term = np.exp(-x * n * n)
        total += term
        if abs(term) < 1e-18 * max(abs(total), 1e-300):
            return complex(total)
        n += 1


def _theta(x: complex) -> complex:
    with mpmath.workdps(40):
        q = mpmath.exp(-mpmath.mpc(x))
        return complex((mpmath.jtheta(3, 0, q) - 1) / 2)


def _poisson(x: complex) -> complex:
    with mpmath.workdps(40):
        x = mpmath.mpc(x)
        root = mpmath.sqrt(mpmath.pi / x)
        total = mpmath.mpc(0)
        n = 1
        while True:
            term = mpmath.exp(-mpmath.pi ** 2 * n * n / x)
            total += term
            if abs(term) < mpmath.mpf(10) ** -35 * max(abs(total), mpmath.mpf(10) ** -300):
                break
            n += 1
        return complex(root / 2 - mpmath.mpf(1) / 2 + root * total)
