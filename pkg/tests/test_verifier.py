import json
import random
from fractions import Fraction as F
from math import comb, factorial

import mpmath as mp
import numpy as np
import pytest

from hyperprandtl import verifier as V
from hyperprandtl.grid import FieldGrid, ScalarField
from hyperprandtl.weights import exact_H2, exact_L2, exact_N2


def N2_closed(m):
    """N^2 at rho = 1 from its closed form (m+1)^18 / (m!)^3."""
    return F((m + 1) ** 18, factorial(m) ** 3)


def test_fe1_worked_example():
    expected = comb(2, 1) ** 2 * N2_closed(3) / (N2_closed(4) * N2_closed(2)) * (1 + 1) ** 2
    assert V.ratio_sq("FE1", (2, 1), 1) == expected
    assert exact_N2(F(1), 3) == N2_closed(3)


def oracle(ident, idx, r):
    """The squared ratios rebuilt from the exact weight mirror (independent of the gmpy2 tables)."""
    H = lambda a, b: exact_H2(r, a, b)
    N = lambda a: exact_N2(r, a)
    L = lambda k: exact_L2(r, k)
    if ident == "FE1":
        m, j = idx
        return comb(m, j) ** 2 * N(m + 1) / (N(j + 3) * N(m - j + 1)) * (j + 1) ** 2
    if ident == "FE2":
        m, j = idx
        return comb(m, j) ** 2 * N(m + 1) / (N(j + 1) * N(m - j + 3)) * (m - j + 1) ** 2
    if ident == "FE3":
        k, i = idx
        return comb(k + 1, i) ** 2 * F(1, k + 1) * L(k) / (H(4, i - 1) * L(k + 1 - i)) * F((i + 1) ** 2, k + 2 - i)
    if ident == "FE4":
        k, i = idx
        return comb(k + 1, i) ** 2 * F(1, k + 1) * L(k) / (H(2, i - 2) * H(3, k + 2 - i)) * (k + 3 - i) ** 2
    if ident == "FE5":
        m, j = idx
        return comb(m, j) ** 2 * (m + 1) * N(m + 1) / (N(j + 1) * H(m - j + 3, 1)) * F((m - j + 1) ** 2, j + 1)
    if ident == "FE6":
        m, j = idx
        return (comb(m, j) ** 2 * (m + 1) * N(m + 1) / (N(j + 3) * H(m - j + 1, 1))
                * F((j + 1) ** 2, (m - j + 1) ** 3))
    m, k, i, j = idx
    pre = comb(m, j) ** 2 * comb(k + 1, i) ** 2 * F(1, m + k + 1) * (m + 1) ** 2 * H(m + 1, k)
    if ident == "FE10":
        return (pre / (H(j + 4, i - 1) * H(m - j + 1, k + 1 - i))
                * F((i + j + 1) ** 4, (j + 4) ** 2 * (m - j + 1) ** 2 * (m + k - i - j + 2)))
    return pre / (H(j + 2, i - 2) * H(m - j + 3, k + 2 - i)) * F((m + k - i - j + 2) ** 4, (j + 1) ** 2)


@pytest.mark.parametrize("ident", V.IDS)
def test_ratio_against_fraction_oracle(ident):
    rng = random.Random(ident)
    gen = V._SETS[ident][0]
    for r in (F(1), F(1, 10), F(3, 7)):
        for _ in range(30):
            level = rng.randint(0, 40)
            idxs = list(gen(level))
            if not idxs:
                continue
            idx = rng.choice(idxs)
            assert V.ratio_sq(ident, idx, r) == oracle(ident, idx, r), idx


def brute_sup(ident, max_level, r):
    gen = V._SETS[ident][0]
    return max((oracle(ident, idx, r) for lev in range(max_level + 1) for idx in gen(lev)), default=F(0))


@pytest.mark.parametrize("ident,level", [("FE1", 30), ("FE2", 30), ("FE3", 30), ("FE4", 30),
                                         ("FE5", 30), ("FE6", 30), ("FE10", 12), ("LAETIMATE", 12)])
def test_sweep_matches_bruteforce(ident, level):
    cert = V.verify(ident, level, F(1, 10))
    assert cert.sup_ratio_sq == brute_sup(ident, level, F(1, 10))
    assert V.ratio_sq(ident, cert.argmax, F(1, 10)) == cert.sup_ratio_sq
    assert isinstance(cert.sup_ratio_sq, F)
    assert cert.passed


def test_index_sets():
    sets = {k: v[0] for k, v in V._SETS.items()}
    # j = 0 is admissible at m = 0 (0 <= j <= m/2)
    assert list(sets["FE1"](0)) == [(0, 0)]
    assert list(sets["FE2"](2)) == [(2, 2)]
    assert list(sets["FE6"](0)) == [] and list(sets["FE6"](1)) == []
    assert list(sets["FE4"](0)) == [(0, 1)]
    for s in range(8):
        a = set(sets["FE10"](s))
        b = set(sets["LAETIMATE"](s))
        for (m, k, i, j) in a:
            assert 1 <= i + j <= (m + k + 1) // 2 and 2 <= i <= k + 1 and 0 <= j <= m
        for (m, k, i, j) in b:
            assert i + j >= (m + k + 1) // 2
        # together they cover every admissible tuple
        full = {(m, s - m, i, j) for m in range(s + 1) for i in range(2, s - m + 2) for j in range(m + 1)}
        assert a | b == full


def test_rho_homogeneity_and_determinism():
    base = V.verify("FE3", 40, F(1, 10))
    for r in V.rho_grid(F(1, 10)):
        c = V.verify("FE3", 40, r)
        assert c.sup_ratio_sq == base.sup_ratio_sq * (F(1, 10) / r) ** 10
        assert c.argmax == base.argmax
    again = V.verify("FE3", 40, F(1, 10))
    assert again.sup_ratio_sq == base.sup_ratio_sq and again.level_max == base.level_max
    assert V.verify("FE3", 40, F(1, 10), workers=2).sup_ratio_sq == base.sup_ratio_sq


def test_monotone_tail_envelope():
    lm = [(0, F(1)), (1, F(5)), (2, F(3)), (3, F(4)), (4, F(2)), (5, F(3)), (6, F(1))]
    assert V._monotone_tail(lm, 1)
    assert not V._monotone_tail(lm + [(7, F(9)), (8, F(1))], 1)
    assert V._monotone_tail([], None)


def test_verify_arguments():
    with pytest.raises(ValueError):
        V.verify("FE7", 10)
    with pytest.raises(ValueError):
        V.verify("FE1", -1)
    with pytest.raises(ValueError):
        V.verify("FE1", 10, 0)


def test_certificate_json():
    c = V.verify_fe1(10, F(1, 10))
    j = c.to_json()
    assert F(int(j["sup_ratio_sq"]["num"]), int(j["sup_ratio_sq"]["den"])) == c.sup_ratio_sq
    json.loads(V.certificates_json({"FE1": c}))


def test_young():
    ok, slack = V.young_holds([F(1)], [F(2), F(3), F(5)])
    assert ok and slack == 0
    ok, slack = V.young_holds([F(0), F(1)], [F(1, 3), F(2)])
    assert ok and slack == 0
    ok, slack = V.young_holds([F(0)] * 3, [F(0)] * 4)
    assert ok
    ok, slack = V.young_holds([F(1), F(1)], [F(1), F(1)])
    assert ok and slack == F(1, 4)
    r = V.verify_young_dis(500, seed=3)
    assert r.passed and r.cases == 500 and r.min_slack >= 0
    assert V.verify_young_dis(500, seed=3).min_slack == r.min_slack


def test_factorial_subadditivity():
    r = V.verify_factorial_subadditivity(20)
    assert r.passed and r.min_slack == 0  # p = q = 0 (and p = 0 in general) gives equality
    assert factorial(1) * factorial(1) <= factorial(2)


def test_geometric_tail():
    r = V.verify_geometric_tail(200)
    assert r.passed and r.cases == 603
    assert max(k * F(1, 2) ** k for k in range(201)) == F(1, 2)


def test_init_bound_zero_and_x_independent():
    g = FieldGrid(8, 96, 20.0)
    z = ScalarField.zeros(g)
    b = V.verify_init_bound(z, z, 0.1, Mmax=16, Kmax=8)
    assert b.C0_emp == 0.0 and b.X0 == 0.0
    # x-independent u0: only the m = 0 d_y u block survives in X, and m = 0 terms in the data norm
    u0 = ScalarField.from_function(g, lambda X, Y: 0 * X + Y * np.exp(-Y))
    b = V.verify_init_bound(u0, z, 0.1, Mmax=16, Kmax=8)
    mp.mp.dps = 30
    yy = mp.mpf
    prof = lambda n: (lambda t: ((-1) ** n) * (t - n) * mp.e ** (-t))  # n-th derivative of y e^-y
    quad = lambda f, p: 2 * mp.pi * mp.quad(lambda t: (1 + t * t) ** p * f(t) ** 2, [0, 5, 20])
    Hm = lambda rho, m, k: yy(rho) ** (m + k + 1) * yy(m + k + 1) ** 9 / (mp.factorial(m + k) * mp.sqrt(mp.factorial(m)))
    X2 = sum(Hm(0.1, 1, k) ** 2 * quad(prof(k + 1), 2) for k in range(9))
    D2 = Hm(0.2, 0, 0) ** 2 * quad(prof(0), 1) + sum(Hm(0.2, 1, k) ** 2 * quad(prof(k + 1), 2) for k in range(9))
    assert b.X0 == pytest.approx(float(mp.sqrt(X2)), rel=1e-8)
    assert b.C0_emp == pytest.approx(float(mp.sqrt(X2 / D2)), rel=1e-8)
    assert b.verdict == "certified"


def test_run_all_small():
    res = V.run_all(["FE1", "FE6", "YOUNG_DIS", "FACT_SUBADD"], {"FE1": 20, "FE6": 20}, young_trials=50, fact_n=10)
    assert all(r.passed for r in res.values())
