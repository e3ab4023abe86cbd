import numpy as np
import pytest

from loopsoliton.abel import abel_map
from loopsoliton.curve import elementary_symmetric, eval_df, lift, make_divisor
from loopsoliton.errors import BranchPointCollision, OnThetaDivisor
from loopsoliton.kleinian import (
    al_divisor,
    al_sigma,
    branch_period_coords,
    log_sigma,
    sigma,
    wp,
    wp_matrix,
    zeta,
    zeta_vector,
)
from loopsoliton.relations import random_divisor


def _points(ctx, n, seed=11):
    rng = np.random.default_rng(seed)
    divs = [random_divisor(ctx.curve, rng) for _ in range(n)]
    return divs, [abel_map(ctx.curve, d) for d in divs]


@pytest.mark.parametrize("name", ["ctx1", "ctx2"])
def test_sigma_vanishes_at_origin(name, request):
    ctx = request.getfixturevalue(name)
    assert sigma(ctx, np.zeros(ctx.genus)) == pytest.approx(0, abs=1e-13)
    with pytest.raises(OnThetaDivisor):
        log_sigma(ctx, np.zeros(ctx.genus))


@pytest.mark.parametrize("name", ["ctx1", "ctx2", "ctx2c"])
def test_sigma_parity(name, request):
    ctx = request.getfixturevalue(name)
    g = ctx.genus
    sign = (-1) ** (g * (g + 1) // 2)
    for u in _points(ctx, 4)[1]:
        a, b = sigma(ctx, -u), sigma(ctx, u)
        assert abs(a - sign * b) <= 1e-10 * abs(b)


def test_sigma_over_u_has_a_limit(ctx1):
    r4 = sigma(ctx1, np.array([1e-4])) / 1e-4
    r5 = sigma(ctx1, np.array([1e-5])) / 1e-5
    assert abs(r4 - r5) <= 1e-6 * abs(r5)


@pytest.mark.parametrize("name", ["ctx1", "ctx2"])
def test_zeta_odd(name, request):
    ctx = request.getfixturevalue(name)
    for u in _points(ctx, 3)[1]:
        assert np.allclose(zeta_vector(ctx, -u), -zeta_vector(ctx, u), atol=1e-10)


def test_zeta_matches_log_sigma_difference(ctx2):
    u = _points(ctx2, 1)[1][0]
    h = 1e-5
    for mu in (1, 2):
        e = np.zeros(2)
        e[mu - 1] = h
        fd = (log_sigma(ctx2, u + e) - log_sigma(ctx2, u - e)) / (2 * h)
        assert abs(fd - zeta(ctx2, u, mu)) <= 1e-6 * max(1, abs(fd))


@pytest.mark.parametrize("name", ["ctx1", "ctx2"])
def test_zeta_quasi_periods(name, request):
    # with this sigma the increment is -2 eta' e_k
    ctx = request.getfixturevalue(name)
    p = ctx.periods
    for u in _points(ctx, 3)[1]:
        for k in range(ctx.genus):
            d = zeta_vector(ctx, u + 2 * p.omega1[:, k]) - zeta_vector(ctx, u)
            assert np.allclose(d, -2 * p.eta1[:, k], atol=1e-8)
            d2 = zeta_vector(ctx, u + 2 * p.omega2[:, k]) - zeta_vector(ctx, u)
            assert np.allclose(d2, -2 * p.eta2[:, k], atol=1e-8)


def test_sigma_quasi_periodicity(ctx2):
    p = ctx2.periods
    for u in _points(ctx2, 3)[1]:
        for k in range(2):
            w, e = p.omega1[:, k], p.eta1[:, k]
            lhs = log_sigma(ctx2, u + 2 * w) - log_sigma(ctx2, u)
            rhs = -2 * e @ (u + w)
            # equal up to the sign of the characteristic factor (a multiple of i pi)
            k_ = (lhs - rhs) / (1j * np.pi)
            assert abs(k_ - round(k_.real)) < 1e-8


@pytest.mark.parametrize("name", ["ctx1", "ctx2"])
def test_wp_periodic_and_symmetric(name, request):
    ctx = request.getfixturevalue(name)
    for u in _points(ctx, 3)[1]:
        P = wp_matrix(ctx, u)
        assert np.array_equal(P, P.T)
        for shift in ctx.periods.lattice_basis.T:
            assert np.allclose(wp_matrix(ctx, u + shift), P, atol=1e-8 * max(1, np.abs(P).max()))


def test_wp11_is_x_at_genus_one(ctx1):
    divs, us = _points(ctx1, 6)
    for d, u in zip(divs, us):
        assert abs(wp(ctx1, u, 1, 1) - d.xs[0]) <= 1e-7


@pytest.mark.parametrize("name", ["ctx2", "ctx2c"])
def test_wp_last_row_gives_symmetric_functions(name, request):
    # wp_{g, g+1-i} = (-1)^(i+1) e_i
    ctx = request.getfixturevalue(name)
    g = ctx.genus
    divs, us = _points(ctx, 6)
    for d, u in zip(divs, us):
        P = wp_matrix(ctx, u)
        e = elementary_symmetric(d)
        for i in range(1, g + 1):
            assert abs(P[g - 1, g - i] - (-1) ** (i + 1) * e[i - 1]) <= 1e-7 * max(1, abs(e[i - 1]))


def _spread(vals):
    vals = np.asarray(vals)
    m = vals.mean()
    return float(np.max(np.abs(vals - m)) / abs(m))


@pytest.mark.parametrize("name", ["ctx1", "ctx2", "ctx2c"])
def test_al_sigma_ratio_is_constant(name, request):
    ctx = request.getfixturevalue(name)
    divs, us = _points(ctx, 8)
    for r in range(1, 2 * ctx.genus + 2):
        ratios = [al_sigma(ctx, u, r) ** 2 / al_divisor(ctx.curve, d, r) ** 2 for d, u in zip(divs, us)]
        assert _spread(ratios) <= 1e-6


def test_al_literal_exponent_is_not_constant(ctx2):
    divs, us = _points(ctx2, 8)
    ratios = [al_sigma(ctx2, u, 2, form="literal") ** 2 / al_divisor(ctx2.curve, d, 2) ** 2 for d, u in zip(divs, us)]
    assert _spread(ratios) > 1e-3


def test_al_squared_is_lattice_periodic(ctx2):
    for u in _points(ctx2, 3)[1]:
        for r in (1, 3):
            base = al_sigma(ctx2, u, r) ** 2
            for shift in ctx2.periods.lattice_basis.T:
                assert abs(al_sigma(ctx2, u + shift, r) ** 2 / base - 1) <= 1e-7


def test_al_finite_near_origin(ctx2):
    ray = np.array([0.3 + 0.1j, -0.2 + 0.4j])
    vals = [al_sigma(ctx2, t * ray, 2) for t in (1e-3, 1e-4, 1e-5)]
    assert np.all(np.isfinite(vals))
    assert abs(vals[1] - vals[2]) < 1e-2 * abs(vals[2])


def test_al_divisor_arithmetic(quintic):
    d = make_divisor(quintic, [lift(quintic, 2), lift(quintic, 3)])
    b_index = int(np.argmin(np.abs(quintic.branch_points - 1))) + 1
    assert abs(al_divisor(quintic, d, b_index) ** 2 - 1 / 3) < 1e-12


def test_al_divisor_collision(quintic):
    d = make_divisor(quintic, [lift(quintic, 1), lift(quintic, 3)])
    b_index = int(np.argmin(np.abs(quintic.branch_points - 1))) + 1
    with pytest.raises(BranchPointCollision):
        al_divisor(quintic, d, b_index)


def test_al_square_relation_all_branch_points(complex_quintic):
    c = complex_quintic
    d = random_divisor(c, np.random.default_rng(5))
    for r, b in enumerate(c.branch_points, 1):
        F = np.prod(b - d.xs)
        assert abs(al_divisor(c, d, r) ** 2 * eval_df(c, b) + F) <= 1e-12 * max(1, abs(F))


def test_half_period_coordinates(ctx2):
    for r in range(1, 6):
        w, eta = branch_period_coords(ctx2, r)
        c = ctx2.periods.lattice_coords(2 * w)
        assert np.allclose(c, np.round(c), atol=1e-9)
