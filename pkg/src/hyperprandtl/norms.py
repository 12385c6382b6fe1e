"""Truncated anisotropic Gevrey norms.

Every x-derivative norm is evaluated through Parseval: for a field g with rfft
coefficients G_k(y),

    ||<y>^p d_x^m g||^2 = sum_k |k|^(2m) S_k,   S_k = c_k (2pi/Nx^2) int <y>^(2p) |G_k|^2 dy

so one spectrum per (field, y-derivative order) serves every m.  Weights and the
|k|^(2m) factors are combined in log space before exponentiation, which keeps
the m-sums finite up to several hundred tangential derivatives.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.special import logsumexp

from .grid import NOISE_THRESHOLD, FieldGrid, ScalarField
from .weights import log_weight_H, log_weight_N

DEFAULT_MMAX = 256
DEFAULT_KMAX = 12
DEFAULT_TAIL_TOL = 1e-6


def log_spectrum(grid: FieldGrid, a: np.ndarray, weight_power: float) -> np.ndarray:
    """log(c_k S_k) for k = 0..Nx/2 (``-inf`` where the mode is empty)."""
    A = sfft.rfft(a, axis=0)
    wy = grid.quad_weights * grid.japanese(2 * weight_power)
    S = (np.abs(A) ** 2) @ wy * (2 * np.pi / grid.Nx**2)
    S[1:-1] *= 2.0
    with np.errstate(divide="ignore"):
        return np.log(np.maximum(S, 0.0))


def log_x_moments(grid: FieldGrid, logS: np.ndarray, mmax: int) -> np.ndarray:
    """log ||<y>^p d_x^m g||^2 for m = 0..mmax from a log spectrum."""
    k = grid.wavenumbers.astype(float)
    m = np.arange(mmax + 1, dtype=float)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logk = np.log(k)
        expo = 2.0 * m * logk[None, :] + logS[None, :]
    expo[:, 0] = -np.inf
    expo[0, 0] = logS[0]
    if grid.Nx % 2 == 0:
        odd = (np.arange(mmax + 1) % 2) == 1
        expo[odd, -1] = -np.inf
    return logsumexp(expo, axis=1)


def _exp_terms(logw2: np.ndarray, logmom: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        out = np.exp(logw2 + logmom)
    return np.where(np.isneginf(logmom), 0.0, out)


@dataclass(frozen=True)
class GevreyNormResult:
    value: float  # truncated squared norm
    tail_ratio_m: float
    tail_ratio_k: float
    noise_flags: frozenset = frozenset()  # normal orders k whose terms were excluded (every m)
    unresolved: float = 0.0
    tail_tol: float = DEFAULT_TAIL_TOL

    @property
    def converged(self) -> bool:
        return self.tail_ratio_m < self.tail_tol and self.tail_ratio_k < self.tail_tol

    @property
    def norm(self) -> float:
        return math.sqrt(self.value)


def gevrey_space_norm(h: ScalarField, rho: float, ell: float | None = None, Mmax: int = DEFAULT_MMAX,
                      Kmax: int = DEFAULT_KMAX, tail_tol: float = DEFAULT_TAIL_TOL) -> GevreyNormResult:
    """Truncated squared G^{3/2,1}_{rho,ell} norm with tail and noise diagnostics."""
    g = h.grid
    ell = g.ell if ell is None else ell
    m = np.arange(Mmax + 1)
    # normalise by a power of two so that scaling h by 2^j scales the result by exactly 4^j
    _, e = np.frexp(np.abs(h.values).max(initial=0.0))
    a = np.ldexp(h.values, -int(e))

    first = _exp_terms(2 * log_weight_N(rho, m), log_x_moments(g, log_spectrum(g, a, ell - 1), Mmax))

    mixed = np.zeros((Mmax + 1, Kmax + 1))
    flags = set()
    for k in range(Kmax + 1):
        dk, noise = g.dy_power_array(a, k + 1)
        logw_k = 2 * (np.log(m + 1.0) + log_weight_H(rho, m + 1, k + 0 * m))
        mixed[:, k] = _exp_terms(logw_k, log_x_moments(g, log_spectrum(g, dk, ell), Mmax))
        if noise > NOISE_THRESHOLD:
            flags.add(k)

    included = np.array([k not in flags for k in range(Kmax + 1)])
    unresolved = float(mixed[:, ~included].sum())
    mixed_in = mixed[:, included]
    total = float(first.sum() + mixed_in.sum())
    if total > 0:
        tail_m = float((first[-1] + mixed_in[-1].sum()) / total)
        top = np.nonzero(included)[0]
        tail_k = float(mixed[:, top[-1]].sum() / total) if top.size else 0.0
    else:
        tail_m = tail_k = 0.0
    scale = 4.0 ** int(e)
    return GevreyNormResult(total * scale, tail_m, tail_k, frozenset(flags), unresolved * scale, tail_tol)


# snapshot norms ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NormReport:
    t: float
    rho: float
    X2: float
    Y2: float
    terms_U: np.ndarray  # X-terms over m
    terms_lambda: np.ndarray
    terms_mixed: np.ndarray  # shape (2, Mmax+1, Kmax+1): [phi, d_y u]
    factor_U: np.ndarray = field(repr=False)  # Y-term / X-term
    factor_lambda: np.ndarray = field(repr=False)
    factor_mixed: np.ndarray = field(repr=False)
    tail_ratio_m: float = 0.0
    tail_ratio_k: float = 0.0
    noise_flags: frozenset = frozenset()  # (block, k): excluded for every m
    unresolved: float = 0.0
    tail_tol: float = DEFAULT_TAIL_TOL

    @property
    def X(self) -> float:
        return math.sqrt(self.X2)

    @property
    def Y(self) -> float:
        return math.sqrt(self.Y2)

    @property
    def converged(self) -> bool:
        return self.tail_ratio_m < self.tail_tol and self.tail_ratio_k < self.tail_tol

    def y_terms(self):
        return (self.terms_U * self.factor_U, self.terms_lambda * self.factor_lambda,
                self.terms_mixed * self.factor_mixed)

    def csv_row(self) -> dict:
        return {
            "t": repr(self.t), "rho": repr(self.rho), "X2": repr(self.X2), "Y2": repr(self.Y2),
            "tail_ratio_m": repr(self.tail_ratio_m), "tail_ratio_k": repr(self.tail_ratio_k),
            "noise_flags": len(self.noise_flags), "unresolved": repr(self.unresolved),
            "converged": int(self.converged),
        }

    def terms_json(self) -> str:
        return json.dumps({
            "t": self.t, "rho": self.rho,
            "terms_U": self.terms_U.tolist(), "terms_lambda": self.terms_lambda.tolist(),
            "terms_mixed_phi": self.terms_mixed[0].tolist(), "terms_mixed_dyu": self.terms_mixed[1].tolist(),
            "noise_flags": sorted(list(f) for f in self.noise_flags),
        })


CSV_FIELDS = ["t", "rho", "X2", "Y2", "tail_ratio_m", "tail_ratio_k", "noise_flags", "unresolved", "converged"]


def evaluate_norms(s, rho: float, Mmax: int = DEFAULT_MMAX, Kmax: int = DEFAULT_KMAX,
                   tail_tol: float = DEFAULT_TAIL_TOL) -> NormReport:
    """X and Y norms of the snapshot's (u, U, lam, phi) at radius ``rho``."""
    g = s.grid
    ell = g.ell
    m = np.arange(Mmax + 1, dtype=float)
    k = np.arange(Kmax + 1, dtype=float)
    logN1 = 2 * log_weight_N(rho, m + 1)

    terms_U = _exp_terms(logN1, log_x_moments(g, log_spectrum(g, s.Uaux.values, 0.0), Mmax))
    terms_lam = _exp_terms(np.log(m + 1) + logN1, log_x_moments(g, log_spectrum(g, s.lam.values, ell - 1), Mmax))

    logH = 2 * (np.log(m + 1)[:, None] + log_weight_H(rho, m[:, None] + 1, k[None, :]))
    mixed = np.zeros((2, Mmax + 1, Kmax + 1))
    flags = set()
    for kk in range(Kmax + 1):
        for block, (a, order) in enumerate(((s.phi.values, kk), (s.u.values, kk + 1))):
            d, noise = g.dy_power_array(a, order)
            mixed[block, :, kk] = _exp_terms(logH[:, kk], log_x_moments(g, log_spectrum(g, d, ell), Mmax))
            if noise > NOISE_THRESHOLD:
                flags.add(("phi" if block == 0 else "dyu", kk))

    mask = np.ones_like(mixed, dtype=bool)
    for name, kk in flags:
        mask[0 if name == "phi" else 1, :, kk] = False
    unresolved = float(mixed[~mask].sum())
    mixed = np.where(mask, mixed, 0.0)

    fac_U = m + 1
    fac_lam = m + 1
    fac_mixed = np.broadcast_to((m[:, None] + k[None, :] + 1), mixed.shape).copy()

    X2 = float(terms_U.sum() + terms_lam.sum() + mixed.sum())
    Y2 = float((terms_U * fac_U).sum() + (terms_lam * fac_lam).sum() + (mixed * fac_mixed).sum())
    assert X2 <= Y2, (X2, Y2)

    if X2 > 0:
        tail_m = float((terms_U[-1] + terms_lam[-1] + mixed[:, -1, :].sum()) / X2)
        kept = [kk for kk in range(Kmax + 1) if mask[:, :, kk].any()]
        tail_k = float(mixed[:, :, kept[-1]].sum() / X2) if kept else 0.0
    else:
        tail_m = tail_k = 0.0
    return NormReport(s.t, rho, X2, Y2, terms_U, terms_lam, mixed, fac_U, fac_lam, fac_mixed,
                      tail_m, tail_k, frozenset(flags), unresolved, tail_tol)


def x_norm(s, rho: float, **caps) -> NormReport:
    return evaluate_norms(s, rho, **caps)


def y_norm(s, rho: float, **caps) -> NormReport:
    return evaluate_norms(s, rho, **caps)


# tangential derivative cross-checks ----------------------------------------------

@dataclass(frozen=True)
class TangentialCheck:
    lhs: float
    rhs_bound: float
    empirical_C: float
    lhs_Y: float
    rhs_Y: float
    empirical_C_Y: float
    lhs_v: float
    empirical_C_v: float
    lhs_vY: float
    empirical_C_vY: float

    def constants(self):
        return {"C_u": self.empirical_C, "C_uY": self.empirical_C_Y,
                "C_v": self.empirical_C_v, "C_vY": self.empirical_C_vY}


def _ratio(a, b):
    return a / b if b > 0 else 0.0


def _v_sup_norms(grid: FieldGrid, v: np.ndarray, logw: np.ndarray) -> np.ndarray:
    """w_m^2 ||d_x^m v||^2_{L^2_x L^inf_y} for each m, w_m = exp(logw[m])."""
    V = sfft.rfft(v, axis=0)
    kk = grid.wavenumbers.astype(float)
    out = np.zeros(logw.size)
    with np.errstate(divide="ignore"):
        logk = np.log(kk)
    for m in range(logw.size):
        mult = np.full(kk.size, 1j**m)
        if m % 2 == 1 and grid.Nx % 2 == 0:
            mult[-1] = 0.0
        scale = np.full(kk.size, -np.inf)
        scale[1:] = logw[m] + m * logk[1:]
        if m == 0:
            scale[0] = logw[0]
        with np.errstate(over="ignore"):
            coef = np.where(np.isneginf(scale), 0.0, np.exp(scale))
        dm = sfft.irfft(V * (mult * coef)[:, None], n=grid.Nx, axis=0)
        sup = np.abs(dm).max(axis=1)
        out[m] = grid.dx * float(np.sum(sup**2))
    return out


def tangential_u_check(s, rho: float, report: NormReport | None = None, Mmax: int = DEFAULT_MMAX,
                       Kmax: int = DEFAULT_KMAX) -> TangentialCheck:
    """Empirical constants controlling u_x-derivatives (and v) by the X and Y norms."""
    g = s.grid
    report = evaluate_norms(s, rho, Mmax, Kmax) if report is None else report
    X2, Y2 = report.X2, report.Y2
    Mmax = report.terms_U.size - 1
    m = np.arange(Mmax + 1, dtype=float)
    u_terms = _exp_terms(2 * log_weight_N(rho, m),
                         log_x_moments(g, log_spectrum(g, s.u.values, g.ell - 1), Mmax))
    lhs = float(u_terms.sum())
    lhs_Y = float((u_terms * (m + 1)).sum())
    v_terms = _v_sup_norms(g, s.v.values, log_weight_N(rho, m + 1))
    lhs_v = float(v_terms.sum())
    lhs_vY = float((v_terms * (m + 1)).sum())
    rhs = (1 + X2) * X2
    rhs_Y = (1 + X2) * Y2
    return TangentialCheck(lhs, rhs, _ratio(lhs, rhs), lhs_Y, rhs_Y, _ratio(lhs_Y, rhs_Y),
                           lhs_v, _ratio(lhs_v, rhs), lhs_vY, _ratio(lhs_vY, rhs_Y))
