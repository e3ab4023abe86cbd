import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopsoliton.curve import curve_from_roots, make_curve
from loopsoliton.errors import NonPositiveImTau
from loopsoliton.periods import (
    ThetaChar,
    canonical_char,
    compute_periods,
    homology_basis,
    integrate_differential,
    intersection_matrix,
    legendre_residual,
    theta,
    theta_log_derivs,
)
from oracles import cubic_half_periods, lemniscate_constant, theta_bruteforce, trapezoid_cut_integral


def test_genus_one_basis(lemniscatic):
    cyc = homology_basis(lemniscatic)
    assert [c.kind for c in cyc] == ["alpha", "beta"]
    assert np.array_equal(intersection_matrix(cyc), [[0, 1], [-1, 0]])


def test_genus_two_basis_is_symplectic(quintic):
    cyc = homology_basis(quintic)
    J = intersection_matrix(cyc)
    assert np.array_equal(J, np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]]))


def test_alpha_integral_is_lemniscate_constant(lemniscatic):
    a = integrate_differential(lemniscatic, homology_basis(lemniscatic)[0], "first", 1)
    assert abs(abs(a) - lemniscate_constant()) < 1e-12


def test_reversed_cycle_negates(quintic):
    for cyc in homology_basis(quintic):
        for k in (1, 2):
            a = integrate_differential(quintic, cyc, "first", k)
            b = integrate_differential(quintic, cyc.reversed(), "first", k)
            assert abs(a + b) < 1e-14 * max(1, abs(a))


def test_second_kind_against_dense_oracle(lemniscatic):
    cyc = homology_basis(lemniscatic)[0]
    first = integrate_differential(lemniscatic, cyc, "first", 1)
    second = integrate_differential(lemniscatic, cyc, "second", 1)
    f = lambda x: 1 / np.sqrt(x ** 3 - x + 0j)
    fx = lambda x: x / np.sqrt(x ** 3 - x + 0j)
    oracle = trapezoid_cut_integral(fx, -1, 0) / trapezoid_cut_integral(f, -1, 0)
    assert abs(second / first - oracle) < 1e-9


@pytest.mark.parametrize("roots", [(-1, 0, 1), (-1.3, 0.1, 1.9), (-0.4, 0.25, 3.0)])
def test_genus_one_periods_match_agm(roots):
    p = compute_periods(curve_from_roots(roots))
    alpha, beta = cubic_half_periods(*roots)
    assert abs(abs(2 * p.omega1[0, 0]) - alpha) <= 1e-10 * alpha
    assert abs(abs(2 * p.omega2[0, 0]) - beta) <= 1e-10 * beta
    assert abs(p.tau[0, 0].real) < 1e-12 and p.tau[0, 0].imag > 0


def test_lemniscatic_tau_is_i(lemniscatic):
    assert abs(compute_periods(lemniscatic).tau[0, 0] - 1j) < 1e-13


@pytest.mark.parametrize("lam", [(0, -1, 0, 1), (0, 4, 0, -5, 0, 1), (0.3, 1, -0.2, 0.5, 0.1, 1)])
def test_legendre_relation(lam):
    sign, res = legendre_residual(compute_periods(make_curve(lam)))
    assert sign == -1
    assert res <= 1e-8


@pytest.mark.parametrize("lam", [(0, 4, 0, -5, 0, 1), (0.3, 1, -0.2, 0.5, 0.1, 1),
                                 (0.2, 1, -0.5, 0.3, 0.1, -0.4, 0.2, 1)])
def test_tau_symmetric_positive(lam):
    p = compute_periods(make_curve(lam))
    assert np.max(np.abs(p.tau - p.tau.T)) <= 1e-8
    assert np.all(np.linalg.eigvalsh(p.tau.imag) > 0)


def test_lattice_coordinates_round_trip(quintic):
    p = compute_periods(quintic)
    m = np.array([1, -2, 3, 1])
    u = p.lattice_basis @ m
    assert np.allclose(p.lattice_coords(u), m, atol=1e-10)
    assert p.lattice_residual(u) < 1e-10


def test_high_genus_needs_flag():
    c = make_curve(np.r_[np.linspace(0.1, 0.5, 11), 1.0])
    with pytest.raises(ValueError):
        compute_periods(c)


def test_theta_null_square_lattice():
    assert abs(theta(np.zeros(1), np.array([[1j]])) - 1.0864348112133082) < 1e-15


def test_theta_rejects_bad_tau():
    with pytest.raises(NonPositiveImTau):
        theta(np.zeros(1), np.array([[-1j]]))


def _tau(ctx):
    return ctx.periods.tau


cz = st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(st.lists(cz, min_size=2, max_size=2))
def test_theta_matches_bruteforce(z):
    tau = np.array([[1.1 + 1.3j, 0.2 + 0.4j], [0.2 + 0.4j, -0.3 + 0.9j]])
    z = np.array(z)
    assert abs(theta(z, tau) - theta_bruteforce(z, tau)) <= 1e-12 * max(1, abs(theta_bruteforce(z, tau)))


@settings(max_examples=40, deadline=None)
@given(st.lists(cz, min_size=2, max_size=2))
def test_theta_even(z):
    tau = np.array([[1.1 + 1.3j, 0.2 + 0.4j], [0.2 + 0.4j, -0.3 + 0.9j]])
    z = np.array(z)
    assert abs(theta(-z, tau) - theta(z, tau)) <= 1e-12 * max(1, abs(theta(z, tau)))


@settings(max_examples=40, deadline=None)
@given(st.lists(cz, min_size=2, max_size=2), st.lists(st.integers(-2, 2), min_size=2, max_size=2))
def test_theta_quasi_periodic(z, m):
    tau = np.array([[1.1 + 1.3j, 0.2 + 0.4j], [0.2 + 0.4j, -0.3 + 0.9j]])
    z, m = np.array(z), np.array(m)
    lhs = theta(z + tau @ m, tau)
    rhs = np.exp(-1j * np.pi * m @ tau @ m - 2j * np.pi * m @ z) * theta(z, tau)
    assert abs(lhs - rhs) <= 1e-12 * max(1, abs(rhs))


def test_theta_integer_shift_periodic():
    tau = np.array([[1.1 + 1.3j, 0.2 + 0.4j], [0.2 + 0.4j, -0.3 + 0.9j]])
    z = np.array([0.3 - 0.2j, -0.1 + 0.4j])
    assert abs(theta(z + np.array([1, 0]), tau) - theta(z, tau)) < 1e-13


def test_theta_truncation_doubling(quintic):
    tau = compute_periods(quintic).tau
    rng = np.random.default_rng(3)
    for tol in (1e-8, 1e-12):
        for _ in range(20):
            z = rng.normal(size=2) + 1j * rng.normal(size=2)
            big = np.exp(np.pi * z.imag @ np.linalg.solve(tau.imag, z.imag))
            a = theta(z, tau, tol=tol)
            b = theta(z, tau, tol=tol, radius_scale=2.0)
            assert abs(a - b) <= tol * big


def test_log_derivatives_match_differences(ctx2):
    tau = ctx2.periods.tau
    char = canonical_char(2)
    z = np.array([0.13 - 0.21j, 0.07 + 0.3j])
    lt, grad, hess = theta_log_derivs(z, tau, char)
    h = 1e-5
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd = (theta_log_derivs(z + e, tau, char, order=0) - theta_log_derivs(z - e, tau, char, order=0)) / (2 * h)
        assert abs(fd - grad[i]) < 1e-7 * max(1, abs(grad[i]))
        g2 = (theta_log_derivs(z + e, tau, char, order=1)[1] - theta_log_derivs(z - e, tau, char, order=1)[1]) / (2 * h)
        assert np.allclose(g2, hess[i], atol=1e-6 * max(1, np.abs(hess).max()))


def test_characteristic_parity():
    assert canonical_char(1).parity() == -1
    assert canonical_char(2).parity() == -1
    assert ThetaChar.zero(2).parity() == 1


def _even_chars(g):
    halves = [Fraction(0), Fraction(1, 2)]
    for a in itertools.product(halves, repeat=g):
        for b in itertools.product(halves, repeat=g):
            ch = ThetaChar(a, b)
            if ch.parity() == 1:
                yield ch


def _theta_null_moduli(tau):
    g = tau.shape[0]
    w = np.linalg.det(tau.imag) ** 0.25
    return np.sort([abs(theta(np.zeros(g), tau, ch)) * w for ch in _even_chars(g)])


def test_relabelled_branch_points_give_same_lattice(complex_quintic):
    # x -> -x reverses the branch-point order and hence the cycle basis
    lam = np.array(complex_quintic.lam)
    mirrored = make_curve(lam * (-1.0) ** (np.arange(lam.size) + 1))
    a = _theta_null_moduli(compute_periods(complex_quintic).tau)
    b = _theta_null_moduli(compute_periods(mirrored).tau)
    assert np.max(np.abs(a - b)) < 1e-6
