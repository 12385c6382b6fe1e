"""Tensor-product discretisation of the half-strip [0, 2pi) x [0, Ymax].

Fourier in x (periodised tangential direction), Chebyshev-Gauss-Lobatto in y with
the wall y = 0 stored at index 0 and the truncation height y = Ymax at index -1.
Fields are ``(Nx, Ny)`` arrays: axis 0 is x, axis 1 is y.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft
from numpy.polynomial import chebyshev as C

from .errors import DomainError, FieldFormatError

NOISE_THRESHOLD = 0.1
NOISE_SAFETY = 4.0
EPS = float(np.finfo(float).eps)
CHOP_TOL = 8 * EPS
DEFAULT_MMAX = 256
DEFAULT_KMAX = 12


def cheb_coeffs(values: np.ndarray) -> np.ndarray:
    """Chebyshev coefficients along the last axis from Lobatto-node values.

    Nodes are ordered z_j = cos(pi j / n), i.e. y ascending.
    """
    n = values.shape[-1] - 1
    c = sfft.dct(values, type=1, axis=-1) / n
    c[..., 0] *= 0.5
    c[..., -1] *= 0.5
    return c


def cheb_values(coeffs: np.ndarray) -> np.ndarray:
    c = coeffs * 0.5
    c[..., 0] *= 2.0
    c[..., -1] *= 2.0
    return sfft.dct(c, type=1, axis=-1)


def cheb_diff_matrix(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Lobatto nodes z_j = cos(pi j / n) and the collocation derivative d/dz."""
    j = np.arange(n + 1)
    z = np.cos(np.pi * j / n)
    if n % 2 == 0:
        z[n // 2] = 0.0
    c = np.where((j == 0) | (j == n), 2.0, 1.0) * (-1.0) ** j
    dz = z[:, None] - z[None, :]
    D = np.outer(c, 1.0 / c) / (dz + np.eye(n + 1))
    D -= np.diag(D.sum(axis=1))
    return z, D


def clenshaw_curtis_weights(n: int) -> np.ndarray:
    """Interpolatory weights on the n+1 Lobatto nodes for integration over [-1, 1]."""
    k = np.arange(n + 1)
    moments = np.zeros(n + 1)
    even = k[k % 2 == 0]
    moments[even] = 2.0 / (1.0 - even.astype(float) ** 2)
    # weight_j = sum_k moment_k * (coefficient k of the j-th cardinal function)
    cardinal = cheb_coeffs(np.eye(n + 1))
    return cardinal @ moments


@dataclass(frozen=True, eq=False)
class FieldGrid:
    Nx: int
    Ny: int
    Ymax: float = 20.0
    ell: float = 2.0
    xs: np.ndarray = field(init=False, repr=False)
    ys: np.ndarray = field(init=False, repr=False)
    quad_weights: np.ndarray = field(init=False, repr=False)
    Dy: np.ndarray = field(init=False, repr=False)
    Iy: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        problems = validate_grid_params(self.Nx, self.Ny, self.Ymax, self.ell)
        if problems:
            raise DomainError("; ".join(problems))
        n = self.Ny - 1
        z, Dz = cheb_diff_matrix(n)
        ys = 0.5 * self.Ymax * (1.0 - z)
        ys[0], ys[-1] = 0.0, self.Ymax
        Dy = -(2.0 / self.Ymax) * Dz

        # antiderivative from y = 0 (z = 1) of the degree-n interpolant
        cardinal = cheb_coeffs(np.eye(self.Ny)).T  # column j: coefficients of e_j
        integ = C.chebint(cardinal, lbnd=1, scl=-0.5 * self.Ymax, axis=0)
        Iy = C.chebvander(z, n + 1) @ integ
        Iy[0, :] = 0.0

        w = 0.5 * self.Ymax * clenshaw_curtis_weights(n)
        xs = 2 * np.pi * np.arange(self.Nx) / self.Nx
        for name, arr in (("xs", xs), ("ys", ys), ("quad_weights", w), ("Dy", Dy), ("Iy", Iy)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    # helpers on raw arrays -------------------------------------------------

    @property
    def shape(self):
        return (self.Nx, self.Ny)

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.arange(self.Nx // 2 + 1)

    @property
    def dx(self) -> float:
        return 2 * np.pi / self.Nx

    @property
    def dy_min(self) -> float:
        return float(self.ys[1] - self.ys[0])

    def japanese(self, power: float) -> np.ndarray:
        """<y>^power = (1 + y^2)^(power/2) on the y nodes."""
        return (1.0 + self.ys**2) ** (0.5 * power)

    def mesh(self):
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    def x_multiplier(self, m: int) -> np.ndarray:
        """(ik)^m on the rfft wavenumbers; the Nyquist mode is dropped for odd m."""
        k = self.wavenumbers
        mult = (1j * k) ** m
        if m % 2 == 1 and self.Nx % 2 == 0:
            mult[-1] = 0.0
        return mult

    def ddx(self, a: np.ndarray, m: int = 1) -> np.ndarray:
        if m == 0:
            return a.copy()
        ah = sfft.rfft(a, axis=0)
        return sfft.irfft(ah * self.x_multiplier(m)[:, None], n=self.Nx, axis=0)

    def ddy(self, a: np.ndarray) -> np.ndarray:
        return a @ self.Dy.T

    def int_y(self, a: np.ndarray) -> np.ndarray:
        return a @ self.Iy.T

    def product(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Pointwise product with 3/2-rule de-aliasing in x."""
        nx = self.Nx
        npad = 3 * nx // 2
        ah = sfft.rfft(a, axis=0)
        bh = sfft.rfft(b, axis=0)
        if nx % 2 == 0:
            ah[-1] = 0.0
            bh[-1] = 0.0
        ap = sfft.irfft(ah, n=npad, axis=0) * (npad / nx)
        bp = sfft.irfft(bh, n=npad, axis=0) * (npad / nx)
        ph = sfft.rfft(ap * bp, axis=0)[: nx // 2 + 1] * (nx / npad)
        if nx % 2 == 0:
            ph[-1] = 0.0
        return sfft.irfft(ph, n=nx, axis=0)

    def dy_power_array(self, a: np.ndarray, k: int) -> tuple[np.ndarray, float]:
        """k-th y-derivative and its noise indicator, computed in coefficient space.

        Coefficients below the round-off floor are chopped first; the indicator is
        the estimated round-off amplitude after j differentiations relative to the
        amplitude of the j-th derivative, maximised over j <= k (a derivative of a
        noise-dominated intermediate is itself noise-dominated).
        """
        if k == 0:
            return a.copy(), 0.0
        coeffs = chop(cheb_coeffs(a))
        d = coeffs
        indicator = 0.0
        for j in range(1, k + 1):
            d = C.chebder(d, m=1, scl=-2.0 / self.Ymax, axis=-1)
            indicator = max(indicator, noise_indicator(coeffs, d, j, self.Ymax))
        full = np.zeros_like(coeffs)
        full[..., : d.shape[-1]] = d
        return cheb_values(full), indicator

    def l2_squared(self, a: np.ndarray, weight_power: float = 0.0) -> float:
        wy = self.quad_weights * self.japanese(2 * weight_power)
        return float(self.dx * np.sum((a * a) @ wy))

    def header_tuple(self):
        return (self.Nx, self.Ny, float(self.Ymax), float(self.ell))


def resample(values: np.ndarray, src: FieldGrid, dst: FieldGrid) -> np.ndarray:
    """Evaluate the Fourier x Chebyshev interpolant of ``values`` at the nodes of ``dst``.

    Both grids must share Ymax.  Used to compare runs at different resolutions.
    """
    if src.Ymax != dst.Ymax:
        raise DomainError(f"cannot resample between Ymax={src.Ymax} and Ymax={dst.Ymax}")
    coeffs = cheb_coeffs(values)
    z = 1.0 - 2.0 * dst.ys / dst.Ymax
    out = C.chebval(z, coeffs.T)  # (Nx, len(z))
    vh = sfft.rfft(out, axis=0)
    kmax = min(src.Nx, dst.Nx) // 2
    wh = np.zeros((dst.Nx // 2 + 1, dst.Ny), dtype=complex)
    wh[:kmax] = vh[:kmax]
    # the shared Nyquist mode is only representable when both grids have it
    if src.Nx == dst.Nx:
        wh[kmax] = vh[kmax]
    return sfft.irfft(wh, n=dst.Nx, axis=0) * (dst.Nx / src.Nx)


def chop(coeffs: np.ndarray, tol: float = CHOP_TOL) -> np.ndarray:
    """Zero the trailing Chebyshev coefficients that sit below ``tol * max|c|``."""
    out = coeffs.copy()
    big = np.abs(out).max(initial=0.0)
    if big == 0.0:
        return out
    above = np.nonzero((np.abs(out) > tol * big).reshape(-1, out.shape[-1]).any(axis=0))[0]
    out[..., above[-1] + 1:] = 0.0
    return out


def noise_indicator(coeffs: np.ndarray, deriv: np.ndarray, k: int, ymax: float) -> float:
    """Round-off amplitude propagated through k derivatives, relative to the signal."""
    signal = math.sqrt(float(np.sum(deriv * deriv)))
    rows = coeffs.reshape(-1, coeffs.shape[-1])
    nz = np.nonzero(np.any(rows != 0.0, axis=0))[0]
    if signal == 0.0 or nz.size == 0:
        return 0.0
    band = nz[-1] + 1
    floor2 = float(np.sum((EPS * np.abs(rows).max(axis=-1)) ** 2))
    amp = C.chebder(np.ones(band), m=k, scl=2.0 / ymax) if band > k else np.zeros(1)
    return NOISE_SAFETY * math.sqrt(floor2 * float(np.sum(amp * amp))) / signal


def validate_grid_params(Nx, Ny, Ymax, ell) -> list[str]:
    problems = []
    if not isinstance(Nx, (int, np.integer)) or Nx < 4 or (Nx & (Nx - 1)) != 0:
        problems.append(f"Nx must be a power of two >= 4, got {Nx!r}")
    if not isinstance(Ny, (int, np.integer)) or Ny < 4:
        problems.append(f"Ny must be an integer >= 4, got {Ny!r}")
    if not (isinstance(Ymax, (int, float)) and Ymax > 0 and math.isfinite(Ymax)):
        problems.append(f"Ymax must be positive, got {Ymax!r}")
    if not (isinstance(ell, (int, float)) and ell >= 2):
        problems.append(f"ell must be >= 2, got {ell!r}")
    return problems


@dataclass(eq=False)
class ScalarField:
    values: np.ndarray
    grid: FieldGrid
    noise: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise DomainError(f"field shape {self.values.shape} != grid shape {self.grid.shape}")
        check_finite(self.values, "field")

    @classmethod
    def zeros(cls, grid):
        return cls(np.zeros(grid.shape), grid)

    @classmethod
    def from_function(cls, grid, fn):
        X, Y = grid.mesh()
        return cls(np.broadcast_to(fn(X, Y), grid.shape).astype(float), grid)

    def __add__(self, other):
        return ScalarField(self.values + _vals(other), self.grid)

    def __sub__(self, other):
        return ScalarField(self.values - _vals(other), self.grid)

    def __mul__(self, other):
        return ScalarField(self.values * _vals(other), self.grid)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(-self.values, self.grid)


def _vals(other):
    return other.values if isinstance(other, ScalarField) else other


def check_finite(a: np.ndarray, what: str = "array"):
    if not np.all(np.isfinite(a)):
        raise FloatingPointError(f"non-finite values in {what}")


def dx_power(f: ScalarField, m: int, mmax: int = DEFAULT_MMAX) -> ScalarField:
    if m < 0 or m > mmax:
        raise DomainError(f"x-derivative order {m} outside [0, {mmax}]")
    return ScalarField(f.grid.ddx(f.values, m), f.grid)


def dy_power(f: ScalarField, k: int, kmax: int = DEFAULT_KMAX) -> ScalarField:
    """k-th normal derivative; ``noise > NOISE_THRESHOLD`` marks a noise-dominated result."""
    if k < 0 or k > kmax:
        raise DomainError(f"y-derivative order {k} outside [0, {kmax}]")
    vals, ind = f.grid.dy_power_array(f.values, k)
    return ScalarField(vals, f.grid, noise=ind)


def vertical_integral(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid.int_y(f.values), f.grid)


def weighted_l2(f: ScalarField, weight_power: float = 0.0) -> float:
    return math.sqrt(f.grid.l2_squared(f.values, weight_power))


def compute_v(u: ScalarField) -> ScalarField:
    """Normal velocity v = -int_0^y du/dx."""
    g = u.grid
    return ScalarField(-g.int_y(g.ddx(u.values, 1)), g)


# field dump format ------------------------------------------------------------
#   64-byte header: magic[8], Nx<q, Ny<q, Ymax<d, ell<d, t<d, 16 reserved bytes
#   payload: little-endian float64, row-major Nx x Ny

FIELD_MAGIC = b"HPRFLD01"
_HEADER = struct.Struct("<8sqqddd16x")
assert _HEADER.size == 64


@dataclass(frozen=True)
class FieldHeader:
    Nx: int
    Ny: int
    Ymax: float
    ell: float
    t: float

    def describe(self):
        return f"Nx={self.Nx} Ny={self.Ny} Ymax={self.Ymax} ell={self.ell} t={self.t}"


def write_field(path, values: np.ndarray, grid: FieldGrid, t: float = 0.0):
    values = np.ascontiguousarray(values, dtype="<f8")
    if values.shape != grid.shape:
        raise FieldFormatError(f"array shape {values.shape} != grid shape {grid.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FIELD_MAGIC, grid.Nx, grid.Ny, float(grid.Ymax), float(grid.ell), float(t)))
        fh.write(values.tobytes(order="C"))


def read_field(path) -> tuple[FieldHeader, np.ndarray]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FieldFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, nx, ny, ymax, ell, t = _HEADER.unpack_from(raw)
    if magic != FIELD_MAGIC:
        raise FieldFormatError(f"{path}: bad magic {magic!r}")
    header = FieldHeader(nx, ny, ymax, ell, t)
    expected = nx * ny * 8
    payload = raw[_HEADER.size:]
    if nx <= 0 or ny <= 0 or len(payload) != expected:
        raise FieldFormatError(f"{path}: payload has {len(payload)} bytes, header {header.describe()} needs {expected}")
    arr = np.frombuffer(payload, dtype="<f8").reshape(nx, ny).astype(float)
    return header, arr
