"""Factorial weight sequences and the shrinking analyticity radius.

The weights

    H(rho, m, k) = rho^(m+k+1) (m+k+1)^9 / ((m+k)! (m!)^(1/2))
    N(rho, m)    = H(rho, m, 0)
    L(rho, k)    = H(rho, 1, k)

overflow double precision long before the orders used in tail studies, so the
float path works with natural logarithms throughout.  Squares of the weights are
rational whenever ``rho`` is, which gives an exact mirror (``exact_N2`` and
friends) used by the verifier and by cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

DEFAULT_MMAX = 256
DEFAULT_KMAX = 64
# log-space evaluation stays finite far beyond this; it is the cap on requests
ORDER_CAP = 10_000


@dataclass(frozen=True)
class RadiusSchedule:
    """rho(t) = rho0 * exp(-mu t) on [0, T]; T defaults to 1/mu."""

    rho0: float
    mu: float
    T: float | None = None

    def __post_init__(self):
        if not (self.rho0 > 0 and math.isfinite(self.rho0)):
            raise DomainError(f"rho0 must be positive, got {self.rho0}")
        if not self.mu >= 1:
            raise DomainError(f"mu must be >= 1, got {self.mu}")
        if self.T is None:
            object.__setattr__(self, "T", 1.0 / self.mu)
        if not self.T > 0:
            raise DomainError(f"horizon T must be positive, got {self.T}")

    @property
    def regime(self) -> str:
        # mu > 1 is what the estimate asks for; mu == 1 is the borderline case
        return "strict" if self.mu > 1 else "borderline"


def radius_at(sched: RadiusSchedule, t: float) -> float:
    slack = 1e-12 * max(1.0, sched.T)
    if not (-slack <= t <= sched.T + slack):
        raise DomainError(f"t={t} outside [0, {sched.T}]")
    return sched.rho0 * math.exp(-sched.mu * t)


def _check_order(*orders):
    for n in orders:
        if n < 0 or n > ORDER_CAP:
            raise DomainError(f"weight order {n} outside [0, {ORDER_CAP}]")


def log_weight_H(rho, m, k):
    """log H(rho, m, k); broadcasts over numpy arrays of m and k.

    ``m + k >= 0`` is all the formula needs, so ``k = -1`` is accepted (the
    normal-derivative estimates touch H(rho, 2, -1)).
    """
    m = np.asarray(m, dtype=float)
    k = np.asarray(k, dtype=float)
    s = m + k
    out = (s + 1) * np.log(rho) + 9.0 * np.log(s + 1) - gammaln(s + 1) - 0.5 * gammaln(m + 1)
    return out if out.ndim else float(out)


def log_weight_N(rho, m):
    # same arithmetic as log_weight_H(rho, m, 0), so the identity is bit-exact
    m = np.asarray(m, dtype=float)
    out = (m + 1) * np.log(rho) + 9.0 * np.log(m + 1) - gammaln(m + 1) - 0.5 * gammaln(m + 1)
    return out if out.ndim else float(out)


def log_weight_L(rho, k):
    """log L(rho, k) from its own closed form rho^(k+2) (k+2)^9 / (k+1)!."""
    k = np.asarray(k, dtype=float)
    out = (k + 2) * np.log(rho) + 9.0 * np.log(k + 2) - gammaln(k + 2)
    return out if out.ndim else float(out)


def weight_N(rho: float, m: int) -> float:
    _check_order(m)
    return math.exp(log_weight_N(rho, m))


def weight_H(rho: float, m: int, k: int) -> float:
    _check_order(m, m + k)
    return math.exp(log_weight_H(rho, m, k))


def weight_L(rho: float, k: int) -> float:
    _check_order(k)
    return math.exp(log_weight_L(rho, k))


def weight_time_derivative(sched: RadiusSchedule, t: float, m: int, k: int) -> float:
    """d/dt H(rho(t), m, k) = -mu (m+k+1) H(rho(t), m, k)."""
    rho = radius_at(sched, t)
    return -sched.mu * (m + k + 1) * weight_H(rho, m, k)


@dataclass(frozen=True)
class WeightTable:
    rho: float
    Mmax: int = DEFAULT_MMAX
    Kmax: int = DEFAULT_KMAX
    ell: float = 2.0
    logN: np.ndarray = field(init=False, repr=False)
    logH: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.rho > 0:
            raise DomainError(f"rho must be positive, got {self.rho}")
        if self.Mmax < 0 or self.Kmax < 0:
            raise DomainError("Mmax and Kmax must be nonnegative")
        if self.ell < 2:
            raise DomainError(f"ell must be >= 2, got {self.ell}")
        _check_order(self.Mmax + self.Kmax)
        m = np.arange(self.Mmax + 1)
        k = np.arange(self.Kmax + 1)
        logN = log_weight_N(self.rho, m)
        logH = log_weight_H(self.rho, m[:, None], k[None, :])
        logN.setflags(write=False)
        logH.setflags(write=False)
        object.__setattr__(self, "logN", logN)
        object.__setattr__(self, "logH", logH)

    def N(self, m):
        return np.exp(self.logN[m])

    def H(self, m, k):
        return np.exp(self.logH[m, k])


# exact squared mirror ---------------------------------------------------------

@lru_cache(maxsize=None)
def _factorial(n: int) -> int:
    return math.factorial(n)


def exact_H2(rho: Fraction, m: int, k: int) -> Fraction:
    """H(rho, m, k)^2 as an exact rational."""
    rho = Fraction(rho)
    s = m + k
    if m < 0 or s < 0:
        raise DomainError(f"exact_H2 needs m >= 0 and m + k >= 0, got ({m}, {k})")
    return rho ** (2 * (s + 1)) * Fraction((s + 1) ** 18, _factorial(s) ** 2 * _factorial(m))


def exact_N2(rho: Fraction, m: int) -> Fraction:
    rho = Fraction(rho)
    return rho ** (2 * (m + 1)) * Fraction((m + 1) ** 18, _factorial(m) ** 3)


def exact_L2(rho: Fraction, k: int) -> Fraction:
    rho = Fraction(rho)
    return rho ** (2 * (k + 2)) * Fraction((k + 2) ** 18, _factorial(k + 1) ** 2)


def log_of_fraction(q: Fraction) -> float:
    """Natural log of a positive rational with arbitrarily large parts."""
    return math.log(q.numerator) - math.log(q.denominator)
