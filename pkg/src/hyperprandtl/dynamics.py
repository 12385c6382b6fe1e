"""First-order hyperbolic Prandtl system and the auxiliary transport fields.

Evolved unknowns, all on the same grid:

    u_t   = phi - u u_x - v u_y
    phi_t = (u_yy - phi) / eta
    f_t   = -u f_x - v f_y - v_x             (f = int_0^y U, U = f_y)
    lam_t = -u lam_x - v lam_y + phi_x - u_x^2 - phi_y f

with v = -int_0^y u_x.  The transported ``lam`` is a consistency copy; the
algebraic lam = u_x - u_y f is what the norms consume.  Wall values of u, phi, f
and the top value of u are injected after every RK stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import BlowupError, DomainError, IncompatibleDataError
from .grid import FieldGrid, ScalarField

ETA_MIN = 0.05
MAX_HALVINGS = 8
WAVE_CFL = 2.0  # RK4 on the damped wave block is stable up to ~2.6 sqrt(eta) dy_min
COMPAT_TOL = 1e-12

Forcing = Callable[[float], Mapping[str, np.ndarray]]


@dataclass(frozen=True, eq=False)
class StateSnapshot:
    t: float
    u: ScalarField
    phi: ScalarField
    f: ScalarField
    lam_evolved: ScalarField
    eta: float = 1.0
    v: ScalarField = field(init=False, repr=False)
    Uaux: ScalarField = field(init=False, repr=False)
    lam: ScalarField = field(init=False, repr=False)

    def __post_init__(self):
        if not self.eta >= ETA_MIN or self.eta > 1:
            raise DomainError(f"eta must lie in [{ETA_MIN}, 1], got {self.eta}")
        g = self.grid
        ux = g.ddx(self.u.values)
        uy = g.ddy(self.u.values)
        object.__setattr__(self, "v", ScalarField(-g.int_y(ux), g))
        object.__setattr__(self, "Uaux", ScalarField(g.ddy(self.f.values), g))
        object.__setattr__(self, "lam", ScalarField(ux - g.product(uy, self.f.values), g))

    @property
    def grid(self) -> FieldGrid:
        return self.u.grid

    @property
    def lam_defect(self) -> float:
        """||lam_evolved - lam_algebraic||_L2."""
        d = self.lam_evolved.values - self.lam.values
        return math.sqrt(self.grid.l2_squared(d))

    def boundary_residual(self) -> dict:
        return {
            "u_wall": float(np.abs(self.u.values[:, 0]).max()),
            "phi_wall": float(np.abs(self.phi.values[:, 0]).max()),
            "u_top": float(np.abs(self.u.values[:, -1]).max()),
            "phi_top": float(np.abs(self.phi.values[:, -1]).max()),
            "v_wall": float(np.abs(self.v.values[:, 0]).max()),
        }

    def divergence_residual(self) -> float:
        """||u_x + v_y|| / ||u_x|| (0 when u_x vanishes)."""
        g = self.grid
        ux = g.ddx(self.u.values)
        r = ux + g.ddy(self.v.values)
        den = math.sqrt(g.l2_squared(ux))
        return math.sqrt(g.l2_squared(r)) / den if den > 0 else math.sqrt(g.l2_squared(r))

    def arrays(self):
        return (self.u.values, self.phi.values, self.f.values, self.lam_evolved.values)

    @classmethod
    def from_arrays(cls, grid, t, u, phi, f, lam, eta):
        try:
            return cls(t, ScalarField(u, grid), ScalarField(phi, grid), ScalarField(f, grid),
                       ScalarField(lam, grid), eta)
        except FloatingPointError as exc:
            raise BlowupError(f"non-finite state at t={t:.6g}", t=t) from exc


@dataclass(frozen=True)
class TimeStepper:
    dt: float
    t_end: float
    cfl_safety: float = 0.5
    scheme: str = "RK4"

    def __post_init__(self):
        if self.scheme != "RK4":
            raise DomainError(f"unsupported scheme {self.scheme!r}")
        if not (0 < self.cfl_safety <= 1):
            raise DomainError("cfl_safety must lie in (0, 1]")
        if not self.dt > 0:
            raise DomainError("dt must be positive")


def cfl_limit(s: StateSnapshot, cfl_safety: float = 1.0) -> float:
    g = s.grid
    umax = float(np.abs(s.u.values).max())
    vmax = float(np.abs(s.v.values).max())
    limits = [WAVE_CFL * math.sqrt(s.eta) * g.dy_min, 2.0 * s.eta]
    if umax > 0:
        limits.append(g.dx / umax)
    if vmax > 0:
        limits.append(g.dy_min / vmax)
    return cfl_safety * min(limits)


# tendencies --------------------------------------------------------------------

def _check(arr, what, t):
    if not np.all(np.isfinite(arr)):
        raise BlowupError(f"non-finite values in {what} at t={t:.6g}", t=t)
    return arr


def tendencies(grid: FieldGrid, eta: float, t: float, u, phi, f, lam, forcing: Forcing | None = None):
    """Time derivatives of (u, phi, f, lam) on raw arrays."""
    P = grid.product
    ux = grid.ddx(u)
    uy = grid.ddy(u)
    uyy = grid.ddy(uy)
    v = -grid.int_y(ux)
    du = phi - P(u, ux) - P(v, uy)
    dphi = (uyy - phi) / eta
    df = -P(u, grid.ddx(f)) - P(v, grid.ddy(f)) - grid.ddx(v)
    dlam = (-P(u, grid.ddx(lam)) - P(v, grid.ddy(lam)) + grid.ddx(phi)
            - P(ux, ux) - P(grid.ddy(phi), f))
    if forcing is not None:
        extra = forcing(t)
        du = du + extra.get("u", 0.0)
        dphi = dphi + extra.get("phi", 0.0)
        df = df + extra.get("f", 0.0)
        dlam = dlam + extra.get("lam", 0.0)
    for arr, name in ((du, "du/dt"), (dphi, "dphi/dt"), (df, "df/dt"), (dlam, "dlam/dt")):
        _check(arr, name, t)
    return du, dphi, df, dlam


def rhs_main(s: StateSnapshot) -> tuple[ScalarField, ScalarField]:
    du, dphi, _, _ = tendencies(s.grid, s.eta, s.t, *s.arrays())
    return ScalarField(du, s.grid), ScalarField(dphi, s.grid)


def rhs_aux_f(s: StateSnapshot, f: ScalarField | None = None) -> ScalarField:
    g = s.grid
    f = s.f if f is None else f
    P = g.product
    v = s.v.values
    out = -P(s.u.values, g.ddx(f.values)) - P(v, g.ddy(f.values)) - g.ddx(v)
    return ScalarField(_check(out, "df/dt", s.t), g)


def lambda_algebraic(s: StateSnapshot) -> ScalarField:
    return s.lam


def rhs_lambda(s: StateSnapshot) -> ScalarField:
    _, _, _, dlam = tendencies(s.grid, s.eta, s.t, *s.arrays())
    return ScalarField(dlam, s.grid)


def ymau_rhs(s: StateSnapshot) -> ScalarField:
    """-u U_x - v U_y + lam_x + (u_xy) f + u_x U, the right side of the U relation."""
    g = s.grid
    P = g.product
    U = s.Uaux.values
    ux = g.ddx(s.u.values)
    uxy = g.ddy(ux)
    out = (-P(s.u.values, g.ddx(U)) - P(s.v.values, g.ddy(U)) + g.ddx(s.lam.values)
           + P(uxy, s.f.values) + P(ux, U))
    return ScalarField(out, g)


# stepping ------------------------------------------------------------------------

def _impose(u, phi, f):
    u[:, 0] = 0.0
    u[:, -1] = 0.0
    phi[:, 0] = 0.0
    f[:, 0] = 0.0


def _rk4(grid, eta, t, y, dt, forcing):
    def stage(base, k, a):
        out = [b + a * kk for b, kk in zip(base, k)]
        _impose(out[0], out[1], out[2])
        return out

    k1 = tendencies(grid, eta, t, *y, forcing)
    k2 = tendencies(grid, eta, t + 0.5 * dt, *stage(y, k1, 0.5 * dt), forcing)
    k3 = tendencies(grid, eta, t + 0.5 * dt, *stage(y, k2, 0.5 * dt), forcing)
    k4 = tendencies(grid, eta, t + dt, *stage(y, k3, dt), forcing)
    out = [yy + dt / 6.0 * (a + 2 * b + 2 * c + d) for yy, a, b, c, d in zip(y, k1, k2, k3, k4)]
    _impose(out[0], out[1], out[2])
    return out


def step(s: StateSnapshot, stepper: TimeStepper, forcing: Forcing | None = None,
         dt: float | None = None) -> StateSnapshot:
    """Advance by ``dt`` (default ``stepper.dt``).

    If the CFL bound is violated the step is split into 2^h RK4 substeps with
    h <= 8; beyond that a BlowupError is raised.
    """
    dt = stepper.dt if dt is None else dt
    limit = cfl_limit(s, stepper.cfl_safety)
    halvings = 0
    while dt / 2**halvings > limit:
        halvings += 1
        if halvings > MAX_HALVINGS:
            raise BlowupError(f"CFL retries exhausted at t={s.t:.6g} (limit {limit:.3g}, dt {dt:.3g})", t=s.t)
    sub = dt / 2**halvings
    y = [a.copy() for a in s.arrays()]
    t = s.t
    for _ in range(2**halvings):
        y = _rk4(s.grid, s.eta, t, y, sub, forcing)
        t += sub
    return StateSnapshot.from_arrays(s.grid, s.t + dt, *y, s.eta)


def make_initial_state(u0: ScalarField, u1: ScalarField, eta: float = 1.0, t: float = 0.0) -> StateSnapshot:
    """phi0 = u1 + u0 u0_x - (u0_y) int_0^y u0_x;  f = 0 (so U = 0) and lam = u0_x."""
    g = u0.grid
    residual = max(float(np.abs(u0.values[:, 0]).max()), float(np.abs(u1.values[:, 0]).max()))
    if residual > COMPAT_TOL:
        raise IncompatibleDataError(f"initial data do not vanish at the wall (max residual {residual:.3e})",
                                    residual=residual)
    ux = g.ddx(u0.values)
    uy = g.ddy(u0.values)
    phi0 = u1.values + g.product(u0.values, ux) - g.product(uy, g.int_y(ux))
    phi0[:, 0] = 0.0
    zeros = np.zeros(g.shape)
    return StateSnapshot(t, ScalarField(u0.values.copy(), g), ScalarField(phi0, g), ScalarField(zeros, g),
                         ScalarField(ux, g), eta)


def zero_state(grid: FieldGrid, eta: float = 1.0) -> StateSnapshot:
    z = ScalarField.zeros(grid)
    return make_initial_state(z, z, eta)


def integrate(s: StateSnapshot, stepper: TimeStepper, forcing: Forcing | None = None, callback=None):
    """Step from s.t to stepper.t_end with a uniform dt that lands on t_end exactly."""
    span = stepper.t_end - s.t
    n = max(1, math.ceil(span / stepper.dt - 1e-9))
    dt = span / n
    if callback is not None:
        callback(0, s)
    for i in range(1, n + 1):
        s = step(s, stepper, forcing, dt=dt)
        if callback is not None:
            callback(i, s)
    return s
