import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperprandtl.errors import DomainError
from hyperprandtl.weights import (
    RadiusSchedule, WeightTable, exact_H2, exact_L2, exact_N2, log_of_fraction, log_weight_H,
    log_weight_L, log_weight_N, radius_at, weight_H, weight_L, weight_N, weight_time_derivative,
)


def test_radius_examples():
    assert radius_at(RadiusSchedule(1.0, 4.0), 0.0) == 1.0
    assert radius_at(RadiusSchedule(1.0, 4.0), 0.25) == pytest.approx(0.3678794, abs=1e-7)
    s = RadiusSchedule(0.5, 2.0)
    r = radius_at(s, 0.5)
    assert r == pytest.approx(0.5 / math.e, rel=1e-15)
    assert 0.5 / math.e * (1 - 1e-15) <= r <= 0.5


def test_radius_domain():
    s = RadiusSchedule(1.0, 2.0)
    assert s.T == 0.5
    with pytest.raises(DomainError):
        radius_at(s, -0.1)
    with pytest.raises(DomainError):
        radius_at(s, 0.6)
    with pytest.raises(DomainError):
        RadiusSchedule(1.0, 0.5)
    with pytest.raises(DomainError):
        RadiusSchedule(0.0, 2.0)


@given(st.floats(1.0, 100.0), st.floats(0.0, 1.0))
def test_radius_bounds(mu, frac):
    s = RadiusSchedule(0.3, mu)
    r = radius_at(s, frac * s.T)
    assert 0.3 / math.e * (1 - 1e-14) <= r <= 0.3


def test_weight_examples():
    assert weight_N(1, 0) == pytest.approx(1.0, rel=1e-15)
    assert weight_N(1, 1) == pytest.approx(512.0, rel=1e-14)
    assert weight_N(1, 2) == pytest.approx(3**9 * 2**-1.5, rel=1e-14)
    assert exact_N2(Fraction(1), 2) == Fraction(3**18, 8)
    assert weight_H(1, 1, 0) == weight_N(1, 1)
    assert weight_H(1, 1, 1) == pytest.approx(19683 / 2, rel=1e-14)
    assert weight_H(1, 0, 1) == pytest.approx(512.0, rel=1e-14)


def test_identities_bit_exact_in_log_space():
    m = np.arange(257)
    for rho in (0.05, 0.1, 0.2, 1.0):
        assert np.array_equal(log_weight_H(rho, m, 0), log_weight_N(rho, m))
        k = np.arange(257)
        rel = np.abs(log_weight_H(rho, 1, k) - log_weight_L(rho, k))
        # log difference bounds the relative error of the weights
        assert rel.max() < 1e-12


def oracle_H(rho, m, k):
    """Independent high-precision evaluation of rho^(s+1)(s+1)^9/(s! sqrt(m!))."""
    s = m + k
    return mp.mpf(rho) ** (s + 1) * mp.mpf(s + 1) ** 9 / (mp.factorial(s) * mp.sqrt(mp.factorial(m)))


def test_float_against_mpmath():
    mp.mp.dps = 40
    for rho in (0.05, 1.0):
        for m, k in [(0, 0), (3, 7), (40, 2), (150, 100)]:
            ref = oracle_H(rho, m, k)
            assert abs(mp.log(ref) - log_weight_H(rho, m, k)) < 1e-12 * max(1, abs(float(mp.log(ref))))


def test_exact_agrees_with_float():
    for rho in (Fraction(1, 20), Fraction(1, 10), Fraction(1, 5), Fraction(1)):
        for m in range(0, 257, 17):
            for k in range(0, 257, 23):
                ex = log_of_fraction(exact_H2(rho, m, k))
                fl = 2 * log_weight_H(float(rho), m, k)
                assert abs(ex - fl) < 1e-12 * max(1.0, abs(ex))
            assert exact_H2(rho, m, 0) == exact_N2(rho, m)
        for k in range(0, 257, 11):
            assert exact_H2(rho, 1, k) == exact_L2(rho, k)


def test_time_derivative_examples():
    s = RadiusSchedule(1.0, 1.0)
    assert weight_time_derivative(s, 0.0, 0, 0) == pytest.approx(-1.0, rel=1e-15)
    s = RadiusSchedule(0.1, 7.0)
    for m, k in [(0, 0), (3, 2), (10, 5)]:
        assert weight_time_derivative(s, 0.05, m, k) / weight_H(radius_at(s, 0.05), m, k) == pytest.approx(
            -7.0 * (m + k + 1), rel=1e-14)


def test_time_derivative_central_difference():
    h = 1e-6
    for mu in (1.0, 4.0):
        s = RadiusSchedule(0.2, mu)
        t = 0.5 * s.T
        for m, k in [(0, 0), (1, 0), (2, 3), (8, 8)]:
            fd = (weight_H(radius_at(s, t + h), m, k) - weight_H(radius_at(s, t - h), m, k)) / (2 * h)
            exact = weight_time_derivative(s, t, m, k)
            # truncation ~ (mu (m+k+1))^3 h^2 / 6 relative, plus round-off ~ eps / h
            bound = 10 * h**2 * (mu * (m + k + 1)) ** 3 + 1e-9
            assert abs(fd / exact - 1) < bound


@settings(max_examples=200)
@given(st.floats(0.01, 2.0), st.integers(0, 500), st.integers(0, 500))
def test_doubling_rho_scales_by_power_of_two(rho, m, k):
    d = log_weight_H(2 * rho, m, k) - log_weight_H(rho, m, k)
    assert d == pytest.approx((m + k + 1) * math.log(2), rel=1e-12, abs=1e-12)


def test_overflow_free_large_orders():
    assert np.isfinite(log_weight_N(0.1, 10_000))
    assert weight_N(0.1, 5000) == 0.0  # underflows gracefully in linear space
    with pytest.raises(DomainError):
        weight_N(0.1, 10_001)
    with pytest.raises(DomainError):
        weight_H(0.1, -1, 0)


def test_k_minus_one_allowed():
    assert exact_H2(Fraction(1), 2, -1) == Fraction(2**18, 2)
    assert log_weight_H(1.0, 2, -1) == pytest.approx(0.5 * math.log(2**18 / 2), rel=1e-14)
    with pytest.raises(DomainError):
        exact_H2(Fraction(1), 0, -1)


def test_weight_table():
    t = WeightTable(0.1, 20, 10)
    assert t.H(3, 4) == pytest.approx(weight_H(0.1, 3, 4), rel=1e-14)
    assert t.N(5) == pytest.approx(weight_N(0.1, 5), rel=1e-14)
    assert weight_L(0.1, 3) == pytest.approx(weight_H(0.1, 1, 3), rel=1e-13)
    with pytest.raises(DomainError):
        WeightTable(0.1, ell=1.5)
    with pytest.raises(ValueError):
        t.logN[0] = 1.0
