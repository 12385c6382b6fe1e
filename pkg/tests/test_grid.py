import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from hyperprandtl.errors import DomainError, FieldFormatError
from hyperprandtl.grid import (
    FieldGrid, ScalarField, cheb_coeffs, cheb_values, clenshaw_curtis_weights, compute_v, dx_power,
    dy_power, read_field, resample, validate_grid_params, vertical_integral, weighted_l2, write_field,
)

ys = sp.symbols("y")


def test_cheb_roundtrip(rng):
    a = rng.standard_normal((3, 17))
    assert np.allclose(cheb_values(cheb_coeffs(a)), a, atol=1e-13)


def test_clenshaw_curtis_exact_on_polynomials():
    w = clenshaw_curtis_weights(16)
    z = np.cos(np.pi * np.arange(17) / 16)
    for p in range(17):
        exact = 0.0 if p % 2 else 2.0 / (p + 1)
        assert w @ z**p == pytest.approx(exact, abs=1e-14)


def test_dx_single_mode(grid):
    g = grid
    prof = lambda Y: Y * np.exp(-Y)
    f = ScalarField.from_function(g, lambda X, Y: np.sin(X) * prof(Y))
    X, Y = g.mesh()
    assert np.allclose(dx_power(f, 1).values, np.cos(X) * prof(Y), atol=1e-14)
    assert np.allclose(dx_power(f, 2).values, -np.sin(X) * prof(Y), atol=1e-14)
    c = ScalarField.from_function(g, lambda X, Y: 0 * X + np.exp(-Y))
    for m in (1, 2, 5):
        assert np.abs(dx_power(c, m).values).max() < 1e-15
    with pytest.raises(DomainError):
        dx_power(f, 300)


def test_dy_symbolic(grid):
    g = FieldGrid(8, 96, 20.0)
    expr = ys * sp.exp(-ys)
    d1 = sp.lambdify(ys, sp.diff(expr, ys))
    f = ScalarField.from_function(g, lambda X, Y: np.sin(X) * Y * np.exp(-Y))
    X, Y = g.mesh()
    assert np.abs(dy_power(f, 1).values - np.sin(X) * d1(Y)).max() < 1e-11
    assert np.array_equal(dy_power(f, 0).values, f.values)


def test_dy_annihilates_polynomials(grid):
    for d in (0, 1, 3, 5):
        f = ScalarField.from_function(grid, lambda X, Y: (1 + np.cos(X)) * (Y / 20) ** d)
        assert np.abs(dy_power(f, d + 1).values).max() < 1e-12


def test_noise_indicator_monotone(grid):
    f = ScalarField.from_function(grid, lambda X, Y: np.sin(X) * Y**3 * np.exp(-Y * Y))
    ind = [dy_power(f, k).noise for k in range(1, 12)]
    assert all(b >= a for a, b in zip(ind, ind[1:]))
    assert ind[0] < 1e-6


def test_vertical_integral(grid):
    f = ScalarField.from_function(grid, lambda X, Y: 0 * X + np.exp(-Y))
    F = vertical_integral(f)
    X, Y = grid.mesh()
    assert np.abs(F.values - (1 - np.exp(-Y))).max() < 1e-10
    assert np.all(F.values[:, 0] == 0.0)
    assert np.abs(vertical_integral(ScalarField.zeros(grid)).values).max() == 0.0
    g = ScalarField.from_function(grid, lambda X, Y: np.cos(2 * X) * Y * np.exp(-Y / 2))
    assert np.abs(dy_power(vertical_integral(g), 1).values - g.values).max() < 1e-10


def test_weighted_l2():
    g = FieldGrid(8, 16, 1.0)
    assert weighted_l2(ScalarField.from_function(g, lambda X, Y: 1 + 0 * X)) == pytest.approx(
        math.sqrt(2 * math.pi), rel=1e-14)
    assert weighted_l2(ScalarField.zeros(g)) == 0.0
    g = FieldGrid(8, 96, 20.0)
    f = ScalarField.from_function(g, lambda X, Y: np.sin(X) * np.exp(-Y))
    assert weighted_l2(f) == pytest.approx(math.sqrt(math.pi * (1 - math.exp(-40)) / 2), rel=1e-12)
    # <y>^1 weight: int (1 + y^2) e^{-2y} = 1/2 + 1/4 on [0, inf)
    assert weighted_l2(f, 1.0) ** 2 == pytest.approx(math.pi * 0.75, rel=1e-10)


def test_divergence_identity(grid):
    u = ScalarField.from_function(grid, lambda X, Y: 1e-3 * (np.sin(X) + 0.3 * np.cos(3 * X)) * Y**2 * np.exp(-Y))
    v = compute_v(u)
    r = dx_power(u, 1).values + dy_power(v, 1).values
    assert np.abs(r).max() <= 1e-10 * np.abs(dx_power(u, 1).values).max()
    assert np.all(v.values[:, 0] == 0.0)


def test_dealiased_product(grid):
    X, Y = grid.mesh()
    a = np.sin(3 * X) * np.exp(-Y)
    b = np.cos(4 * X) * np.exp(-Y)
    # 7 < Nx/2 = 8: the product is resolved and must be exact
    assert np.abs(grid.product(a, b) - a * b).max() < 1e-14
    # content above the cutoff must be removed rather than aliased into low modes
    a = np.sin(6 * X) + 0 * Y
    p = grid.product(a, a)  # (1 - cos 12x)/2: only the mean survives
    assert np.abs(p - 0.5).max() < 1e-14


def test_spectral_convergence_analytic():
    # an entire function with oscillation: badly under-resolved at Ny=48, converged at Ny=96
    err = []
    for ny in (48, 96):
        g = FieldGrid(8, ny, 20.0)
        X, Y = g.mesh()
        f = np.sin(X) * Y * np.exp(-Y) * np.cos(6 * Y)
        exact = np.sin(X) * np.exp(-Y) * ((1 - Y) * np.cos(6 * Y) - 6 * Y * np.sin(6 * Y))
        err.append(np.abs(g.ddy(f) - exact).max())
    assert err[0] / err[1] > 1e3


def test_field_io_roundtrip(tmp_path, grid, rng):
    a = rng.standard_normal(grid.shape)
    p = tmp_path / "a.bin"
    write_field(p, a, grid, 0.25)
    h, b = read_field(p)
    assert np.array_equal(a, b)
    assert (h.Nx, h.Ny, h.Ymax, h.ell, h.t) == (16, 64, 20.0, 2.0, 0.25)
    (tmp_path / "empty.bin").write_bytes(b"")
    with pytest.raises(FieldFormatError):
        read_field(tmp_path / "empty.bin")
    raw = p.read_bytes()
    (tmp_path / "short.bin").write_bytes(raw[:-8])
    with pytest.raises(FieldFormatError):
        read_field(tmp_path / "short.bin")
    (tmp_path / "magic.bin").write_bytes(b"X" + raw[1:])
    with pytest.raises(FieldFormatError):
        read_field(tmp_path / "magic.bin")


def test_resample_between_resolutions():
    src = FieldGrid(16, 48, 20.0)
    dst = FieldGrid(32, 80, 20.0)
    fn = lambda X, Y: (np.sin(X) + 0.2 * np.cos(5 * X)) * Y * np.exp(-Y)
    a = ScalarField.from_function(src, fn).values
    out = resample(a, src, dst)
    assert np.abs(out - ScalarField.from_function(dst, fn).values).max() < 1e-12
    back = resample(out, dst, src)
    assert np.abs(back - a).max() < 1e-12
    with pytest.raises(DomainError):
        resample(a, src, FieldGrid(16, 48, 10.0))


def test_grid_validation():
    assert validate_grid_params(64, 96, 20.0, 2.0) == []
    probs = validate_grid_params(48, 0, -1.0, 1.0)
    assert len(probs) == 4
    with pytest.raises(DomainError):
        FieldGrid(64, 0)


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5), st.integers(1, 7))
def test_norm_scaling(c, k):
    g = FieldGrid(16, 32, 20.0)
    f = ScalarField.from_function(g, lambda X, Y: np.sin(k * X) * Y * np.exp(-Y))
    assert g.l2_squared(c * f.values, 1.0) == pytest.approx(c * c * g.l2_squared(f.values, 1.0), rel=1e-13, abs=1e-300)
