"""Kleinian sigma, zeta and wp functions, and the al functions.

    sigma(u) = exp(-1/2 u^T eta' omega'^{-1} u) * theta[delta''; delta'](1/2 omega'^{-1} u; tau)

with the normalising constant fixed to 1.  Everything downstream uses only
log-derivatives and ratios, which do not see that constant.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .abel import half_period
from .curve import Divisor, HyperellipticCurve, eval_df
from .errors import BranchPointCollision, OnThetaDivisor
from .periods import PeriodData, ThetaChar, canonical_char, compute_periods, theta_log_derivs

__all__ = [
    "SigmaContext",
    "make_context",
    "log_sigma",
    "sigma",
    "zeta",
    "zeta_vector",
    "wp",
    "wp_matrix",
    "al_sigma",
    "al_divisor",
    "branch_period_coords",
]

THETA_DIVISOR_TOL = 1e-12


@dataclass(frozen=True)
class SigmaContext:
    curve: HyperellipticCurve
    periods: PeriodData
    H: np.ndarray       # eta' omega'^{-1}, symmetric by the Legendre relation
    A: np.ndarray       # 1/2 omega'^{-1}
    char: ThetaChar
    half_periods: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def genus(self) -> int:
        return self.curve.genus


def make_context(curve: HyperellipticCurve, periods: PeriodData | None = None,
                 char: ThetaChar | None = None) -> SigmaContext:
    if periods is None:
        periods = compute_periods(curve)
    inv = np.linalg.inv(periods.omega1)
    H = periods.eta1 @ inv
    H = 0.5 * (H + H.T)
    return SigmaContext(curve, periods, H, 0.5 * inv, char or canonical_char(curve.genus))


def _log_sigma(ctx: SigmaContext, u, order: int):
    u = np.asarray(u, dtype=complex)
    z = ctx.A @ u
    out = theta_log_derivs(z, ctx.periods.tau, ctx.char, order=order, with_shift=True)
    logt = out[0]
    if logt.real - out[-1] < np.log(THETA_DIVISOR_TOL):
        raise OnThetaDivisor(f"sigma nearly vanishes at u={u}")
    quad = -0.5 * u @ ctx.H @ u
    if order == 0:
        return quad + logt
    grad = -ctx.H @ u + ctx.A.T @ out[1]
    if order == 1:
        return quad + logt, grad
    hess = -ctx.H + ctx.A.T @ out[2] @ ctx.A
    return quad + logt, grad, hess


def log_sigma(ctx: SigmaContext, u) -> complex:
    return complex(_log_sigma(ctx, u, 0))


def sigma(ctx: SigmaContext, u) -> complex:
    """sigma(u); returns 0 exactly on (numerically) the theta divisor."""
    try:
        return complex(np.exp(_log_sigma(ctx, u, 0)))
    except OnThetaDivisor:
        u = np.asarray(u, dtype=complex)
        from .periods import theta
        return complex(np.exp(-0.5 * u @ ctx.H @ u) * theta(ctx.A @ u, ctx.periods.tau, ctx.char))


def zeta_vector(ctx: SigmaContext, u) -> np.ndarray:
    return _log_sigma(ctx, u, 1)[1]


def zeta(ctx: SigmaContext, u, mu: int) -> complex:
    """zeta_mu = d/du_mu log sigma (mu is 1-based)."""
    return complex(zeta_vector(ctx, u)[mu - 1])


def wp_matrix(ctx: SigmaContext, u) -> np.ndarray:
    """Matrix of wp_{mu nu} = -d^2 log sigma / du_mu du_nu."""
    h = -_log_sigma(ctx, u, 2)[2]
    return 0.5 * (h + h.T)


def wp(ctx: SigmaContext, u, mu: int, nu: int) -> complex:
    return complex(wp_matrix(ctx, u)[mu - 1, nu - 1])


def _half_period(ctx: SigmaContext, r: int) -> np.ndarray:
    if r not in ctx.half_periods:
        ctx.half_periods[r] = half_period(ctx.curve, r)
    return ctx.half_periods[r]


def branch_period_coords(ctx: SigmaContext, r: int) -> tuple:
    """(omega_r, eta_r): the half-period of b_r and its second-kind companion.

    With omega_r = omega' m' + omega'' m'' (half-integer m), eta_r is
    eta' m' + eta'' m''.
    """
    w = _half_period(ctx, r)
    c = ctx.periods.lattice_coords(w)
    m = np.round(2 * c) / 2
    g = ctx.genus
    p = ctx.periods
    eta = 2 * (p.eta1 @ m[:g] + p.eta2 @ m[g:])
    return w, eta


def al_sigma(ctx: SigmaContext, u, r: int, form: str = "consistent") -> complex:
    """al_r(u) up to a constant, as a sigma ratio.

    ``form="consistent"`` uses exp(u^T eta_r) sigma(u + omega_r) / sigma(u),
    the exponent that makes the ratio a single-valued function of the
    divisor for this sigma.  ``form="literal"`` uses exp(-u^T eta' omega'^{-1}
    omega_r), kept only for comparison.
    """
    u = np.asarray(u, dtype=complex)
    w, eta = branch_period_coords(ctx, r)
    if form == "consistent":
        pref = u @ eta
    elif form == "literal":
        pref = -u @ ctx.H @ w
    else:
        raise ValueError(f"unknown form {form!r}")
    return complex(np.exp(pref + _log_sigma(ctx, u + w, 0) - _log_sigma(ctx, u, 0)))


def al_divisor(curve: HyperellipticCurve, divisor: Divisor, r: int, p_prime: str = "f") -> complex:
    """gamma_r sqrt(F(b_r)) with gamma_r = sqrt(-1/P'(b_r)).

    ``p_prime="f"`` reads P as the curve polynomial; ``"F"`` uses the
    divisor polynomial F instead.
    """
    b = curve.branch_points[r - 1]
    xs = divisor.xs
    scale = 1 + abs(b)
    if np.min(np.abs(xs - b)) <= 1e-12 * scale:
        raise BranchPointCollision(f"divisor contains branch point b_{r}")
    Fb = np.prod(b - xs)
    if p_prime == "f":
        dP = eval_df(curve, b)
    elif p_prime == "F":
        dP = sum(np.prod(np.delete(b - xs, i)) for i in range(xs.size))
    else:
        raise ValueError(p_prime)
    return complex(np.sqrt(-1 / dP) * np.sqrt(Fb))
