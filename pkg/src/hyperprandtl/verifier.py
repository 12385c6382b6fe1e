"""Exact certification of the factorial-weight inequalities over finite ranges.

Each inequality has the form LHS <= C * g over an index set.  Everything is
squared: (LHS / g)^2 is rational whenever rho is, because the weights only
involve (m!)^(1/2).  The sweep keeps the exact supremum of that squared ratio,
the index tuple where it is attained, and the per-level maxima used for the tail
check.  No floating-point value enters a certificate.

Squared weights are split as H^2 = (rho^2)^(a+b+1) * hn(a, b) / hd(a, b) with

    hn(a, b) = (a+b+1)^18,   hd(a, b) = ((a+b)!)^2 * a!

and every ratio below is homogeneous in rho, so the rho power is a single
exponent per inequality.
"""

from __future__ import annotations

import json
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import gmpy2
from gmpy2 import mpz

WORKERS_ENV = "HYPERPRANDTL_WORKERS"
MAX_M_EXACT = 400
IDS = ("FE1", "FE2", "FE3", "FE4", "FE5", "FE6", "FE10", "LAETIMATE")


@lru_cache(maxsize=None)
def _fact(n: int):
    return gmpy2.fac(n)


@lru_cache(maxsize=None)
def _hn(a: int, b: int):
    return mpz(a + b + 1) ** 18


@lru_cache(maxsize=None)
def _hd(a: int, b: int):
    return _fact(a + b) ** 2 * _fact(a)


@lru_cache(maxsize=None)
def _binom2(n: int, r: int):
    return gmpy2.comb(n, r) ** 2


def _fe1(m, j):
    # C(m,j) N_{m+1} / (N_{j+3} N_{m-j+1}) <= C / (j+1)
    num = _binom2(m, j) * _hn(m + 1, 0) * _hd(j + 3, 0) * _hd(m - j + 1, 0) * (j + 1) ** 2
    den = _hd(m + 1, 0) * _hn(j + 3, 0) * _hn(m - j + 1, 0)
    return num, den


def _fe2(m, j):
    # C(m,j) N_{m+1} / (N_{j+1} N_{m-j+3}) <= C / (m-j+1)
    num = _binom2(m, j) * _hn(m + 1, 0) * _hd(j + 1, 0) * _hd(m - j + 3, 0) * (m - j + 1) ** 2
    den = _hd(m + 1, 0) * _hn(j + 1, 0) * _hn(m - j + 3, 0)
    return num, den


def _fe3(k, i):
    # C(k+1,i) (k+1)^(-1/2) L_k / (H_{4,i-1} L_{k+1-i}) <= C (k+2-i)^(1/2) / (i+1)
    num = _binom2(k + 1, i) * _hn(1, k) * _hd(4, i - 1) * _hd(1, k + 1 - i) * (i + 1) ** 2
    den = (k + 1) * _hd(1, k) * _hn(4, i - 1) * _hn(1, k + 1 - i) * (k + 2 - i)
    return num, den


def _fe4(k, i):
    # C(k+1,i) (k+1)^(-1/2) L_k / (H_{2,i-2} H_{3,k+2-i}) <= C / (k+3-i)
    num = _binom2(k + 1, i) * _hn(1, k) * _hd(2, i - 2) * _hd(3, k + 2 - i) * (k + 3 - i) ** 2
    den = (k + 1) * _hd(1, k) * _hn(2, i - 2) * _hn(3, k + 2 - i)
    return num, den


def _fe5(m, j):
    # C(m,j) (m+1)^(1/2) N_{m+1} / (N_{j+1} H_{m-j+3,1}) <= C (j+1)^(1/2) / (m-j+1)
    num = _binom2(m, j) * (m + 1) * _hn(m + 1, 0) * _hd(j + 1, 0) * _hd(m - j + 3, 1) * (m - j + 1) ** 2
    den = _hd(m + 1, 0) * _hn(j + 1, 0) * _hn(m - j + 3, 1) * (j + 1)
    return num, den


def _fe6(m, j):
    # C(m,j) (m+1)^(1/2) N_{m+1} / (N_{j+3} H_{m-j+1,1}) <= C (m-j+1)^(3/2) / (j+1)
    num = _binom2(m, j) * (m + 1) * _hn(m + 1, 0) * _hd(j + 3, 0) * _hd(m - j + 1, 1) * (j + 1) ** 2
    den = _hd(m + 1, 0) * _hn(j + 3, 0) * _hn(m - j + 1, 1) * mpz(m - j + 1) ** 3
    return num, den


def _fe10(m, k, i, j):
    # C(m,j) C(k+1,i) (m+k+1)^(-1/2) (m+1) H_{m+1,k} / (H_{j+4,i-1} H_{m-j+1,k+1-i})
    #   <= (j+4) (m-j+1) (m+k-i-j+2)^(1/2) / (i+j+1)^2
    num = (_binom2(m, j) * _binom2(k + 1, i) * (m + 1) ** 2 * _hn(m + 1, k)
           * _hd(j + 4, i - 1) * _hd(m - j + 1, k + 1 - i) * mpz(i + j + 1) ** 4)
    den = ((m + k + 1) * _hd(m + 1, k) * _hn(j + 4, i - 1) * _hn(m - j + 1, k + 1 - i)
           * (j + 4) ** 2 * (m - j + 1) ** 2 * (m + k - i - j + 2))
    return num, den


def _laetimate(m, k, i, j):
    # C(m,j) C(k+1,i) (m+k+1)^(-1/2) (m+1) H_{m+1,k} / (H_{j+2,i-2} H_{m-j+3,k+2-i})
    #   <= C (j+1) / (m+k-i-j+2)^2
    num = (_binom2(m, j) * _binom2(k + 1, i) * (m + 1) ** 2 * _hn(m + 1, k)
           * _hd(j + 2, i - 2) * _hd(m - j + 3, k + 2 - i) * mpz(m + k - i - j + 2) ** 4)
    den = ((m + k + 1) * _hd(m + 1, k) * _hn(j + 2, i - 2) * _hn(m - j + 3, k + 2 - i) * (j + 1) ** 2)
    return num, den


# net power of rho^2 in each squared ratio (the weights are homogeneous in rho)
RHO2_EXPONENT = {"FE1": -4, "FE2": -4, "FE3": -5, "FE4": -5, "FE5": -5, "FE6": -5,
                 "FE10": -5, "LAETIMATE": -5}


def _index_sets():
    """level -> iterator of index tuples, per inequality."""
    def fe1(m):
        return ((m, j) for j in range(m // 2 + 1))

    def fe2(m):
        return ((m, j) for j in range(m // 2 + 1, m + 1))

    def fe3(k):
        return ((k, i) for i in range(1, (k + 1) // 2 + 1))

    def fe4(k):
        # k = 0, i = 1 touches H_{2,-1}; the weight formula only needs m + k >= 0
        return ((k, i) for i in range((k + 1) // 2 + 1, k + 2))

    def fe6(m):
        return ((m, j) for j in range(1, m // 2 + 1))

    def fe10(s):
        for m in range(s + 1):
            k = s - m
            half = (m + k + 1) // 2
            for i in range(2, k + 2):
                for j in range(0, min(m, half - i) + 1):
                    yield (m, k, i, j)

    def lae(s):
        for m in range(s + 1):
            k = s - m
            half = (m + k + 1) // 2
            for i in range(2, k + 2):
                for j in range(max(0, half - i), m + 1):
                    yield (m, k, i, j)

    return {"FE1": (fe1, _fe1), "FE2": (fe2, _fe2), "FE3": (fe3, _fe3),
            "FE4": (fe4, _fe4), "FE5": (fe2, _fe5), "FE6": (fe6, _fe6),
            "FE10": (fe10, _fe10), "LAETIMATE": (lae, _laetimate)}


_SETS = _index_sets()


def _sweep_levels(ident: str, levels) -> list:
    """[(level, num, den, argmax)] with the exact max of num/den per level (None if empty)."""
    gen, fn = _SETS[ident]
    out = []
    for lev in levels:
        best = None
        for idx in gen(lev):
            num, den = fn(*idx)
            if best is None or num * best[1] > best[0] * den:
                best = (num, den, idx)
        if best is None:
            out.append((lev, None, None, None))
        else:
            out.append((lev, int(best[0]), int(best[1]), best[2]))
    return out


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


@dataclass(frozen=True)
class InequalityCertificate:
    inequality_id: str
    range: dict
    rho: Fraction
    sup_ratio_sq: Fraction
    argmax: tuple | None
    monotone_tail: bool
    level_max: tuple = field(default=(), repr=False)  # exact per-level maxima (Fraction or None)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        # sup is an exact rational, hence finite; the tail must not grow past the argmax
        return self.monotone_tail

    def to_json(self) -> dict:
        return {
            "id": self.inequality_id, "range": self.range,
            "rho": {"num": str(self.rho.numerator), "den": str(self.rho.denominator)},
            "sup_ratio_sq": {"num": str(self.sup_ratio_sq.numerator), "den": str(self.sup_ratio_sq.denominator)},
            "sup_ratio_sq_approx": float(self.sup_ratio_sq),
            "argmax": list(self.argmax) if self.argmax is not None else None,
            "monotone_tail": self.monotone_tail, "passed": self.passed,
            "wall_time": self.wall_time,
        }


def _monotone_tail(level_max: list, arg_level: int | None) -> bool:
    """Non-increasing two-level envelope max(R(n), R(n+1)) from the argmax level on.

    The index sets split at floor(m/2) or floor((m+k+1)/2), so the raw level
    maxima alternate between even and odd levels; the envelope removes that.
    """
    if arg_level is None:
        return True
    tail = [v for lev, v in level_max if lev >= arg_level and v is not None]
    env = [max(a, b) for a, b in zip(tail, tail[1:])] or tail
    return all(b <= a for a, b in zip(env, env[1:]))


def verify(ident: str, max_level: int, rho=Fraction(1), workers: int | None = None) -> InequalityCertificate:
    """Exact sup of (LHS/g)^2 over all index tuples with level <= max_level.

    The level is m for FE1, FE2, FE5, FE6, k for FE3, FE4 and m + k for FE10 and
    LAETIMATE.
    """
    if ident not in _SETS:
        raise ValueError(f"unknown inequality {ident!r}")
    if max_level < 0:
        raise ValueError("max_level must be nonnegative")
    if ident in ("FE1", "FE2", "FE5", "FE6") and max_level > MAX_M_EXACT:
        raise ValueError(f"max_m must be <= {MAX_M_EXACT}")
    rho = Fraction(rho)
    if rho <= 0:
        raise ValueError("rho must be positive")
    t0 = time.perf_counter()
    levels = list(range(max_level + 1))
    n = worker_count(workers)
    if n == 1:
        rows = _sweep_levels(ident, levels)
    else:
        # interleave levels so the expensive high ones are spread over workers
        chunks = [levels[r::n] for r in range(n)]
        with ProcessPoolExecutor(n) as pool:
            parts = pool.map(_sweep_levels, [ident] * n, chunks)
            rows = sorted((r for part in parts for r in part), key=lambda r: r[0])

    scale = (rho * rho) ** RHO2_EXPONENT[ident]
    level_max = []
    best, arg, arg_level = Fraction(0), None, None
    for lev, num, den, idx in rows:
        if num is None:
            level_max.append((lev, None))
            continue
        val = Fraction(num, den) * scale
        level_max.append((lev, val))
        if arg is None or val > best:
            best, arg, arg_level = val, idx, lev
    key = {"FE3": "max_k", "FE4": "max_k", "FE10": "max_m_plus_k", "LAETIMATE": "max_m_plus_k"}.get(ident, "max_m")
    return InequalityCertificate(ident, {key: max_level}, rho, best, arg, _monotone_tail(level_max, arg_level),
                                 tuple(v for _, v in level_max), time.perf_counter() - t0)


def verify_fe1(max_m: int, rho=Fraction(1), workers=None):
    return verify("FE1", max_m, rho, workers)


def verify_fe2(max_m: int, rho=Fraction(1), workers=None):
    return verify("FE2", max_m, rho, workers)


def verify_fe3(max_k: int, rho=Fraction(1), workers=None):
    return verify("FE3", max_k, rho, workers)


def verify_fe4(max_k: int, rho=Fraction(1), workers=None):
    return verify("FE4", max_k, rho, workers)


def verify_fe5(max_m: int, rho=Fraction(1), workers=None):
    return verify("FE5", max_m, rho, workers)


def verify_fe6(max_m: int, rho=Fraction(1), workers=None):
    return verify("FE6", max_m, rho, workers)


def verify_fe10(max_mk: int, rho=Fraction(1), workers=None):
    return verify("FE10", max_mk, rho, workers)


def verify_laetimate(max_mk: int, rho=Fraction(1), workers=None):
    return verify("LAETIMATE", max_mk, rho, workers)


def ratio_sq(ident: str, idx: tuple, rho=Fraction(1)) -> Fraction:
    """(LHS/g)^2 at a single index tuple, exactly."""
    num, den = _SETS[ident][1](*idx)
    return Fraction(int(num), int(den)) * (Fraction(rho) ** 2) ** RHO2_EXPONENT[ident]


def rho_grid(rho0, n_points: int = 4) -> list[Fraction]:
    """Rationals spread over [rho0/e, rho0]: rho0 * (1, 3/4, 1/2, 3/8) by default."""
    fr = [Fraction(1), Fraction(3, 4), Fraction(1, 2), Fraction(3, 8)]
    return [Fraction(rho0) * f for f in fr[:n_points]]


# scalar facts ------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    check_id: str
    passed: bool
    cases: int
    min_slack: Fraction  # smallest (rhs - lhs) / rhs over cases; 0 means equality occurred
    worst_case: object = None
    wall_time: float = 0.0

    def to_json(self) -> dict:
        return {"id": self.check_id, "passed": self.passed, "cases": self.cases,
                "min_slack": {"num": str(self.min_slack.numerator), "den": str(self.min_slack.denominator)},
                "min_slack_approx": float(self.min_slack), "worst_case": self.worst_case,
                "wall_time": self.wall_time}


def _rand_rational_seq(rng: random.Random, length: int, max_num: int, max_den: int) -> list[Fraction]:
    return [Fraction(rng.randint(0, max_num), rng.randint(1, max_den)) for _ in range(length)]


def young_holds(p, q) -> tuple[bool, Fraction]:
    """||p*q||_2^2 <= ||q||_2^2 ||p||_1^2 for nonnegative rational sequences, with the slack."""
    conv = [Fraction(0)] * (len(p) + len(q) - 1)
    for a, pa in enumerate(p):
        if pa:
            for b, qb in enumerate(q):
                conv[a + b] += pa * qb
    lhs = sum(c * c for c in conv)
    rhs = sum(x * x for x in q) * sum(p) ** 2
    if rhs == 0:
        return lhs == 0, Fraction(0)
    return lhs <= rhs, (rhs - lhs) / rhs


def verify_young_dis(trials: int = 10_000, length: int = 8, seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    rng = random.Random(seed)
    ok = True
    worst, worst_case = None, None
    for trial in range(trials):
        n1 = rng.randint(1, length)
        n2 = rng.randint(1, length)
        p = _rand_rational_seq(rng, n1, 50, 20)
        q = _rand_rational_seq(rng, n2, 50, 20)
        holds, slack = young_holds(p, q)
        ok &= holds
        if worst is None or slack < worst:
            worst, worst_case = slack, trial
    return CheckResult("YOUNG_DIS", ok, trials, worst if worst is not None else Fraction(0),
                       {"trial": worst_case, "seed": seed}, time.perf_counter() - t0)


def verify_factorial_subadditivity(max_n: int = 60) -> CheckResult:
    """p! q! <= (p+q)! for p + q <= max_n, and C(a1,b1) C(a2,b2) <= C(a1+a2, b1+b2)."""
    t0 = time.perf_counter()
    ok = True
    cases = 0
    worst, worst_case = None, None
    for n in range(max_n + 1):
        fn = _fact(n)
        for p in range(n + 1):
            lhs = _fact(p) * _fact(n - p)
            cases += 1
            ok &= lhs <= fn
            slack = Fraction(int(fn - lhs), int(fn))
            if worst is None or slack < worst:
                worst, worst_case = slack, ("factorial", p, n - p)
    for a1 in range(max_n + 1):
        for a2 in range(max_n + 1 - a1):
            for b1 in range(a1 + 1):
                c1 = gmpy2.comb(a1, b1)
                for b2 in range(a2 + 1):
                    cases += 1
                    ok &= c1 * gmpy2.comb(a2, b2) <= gmpy2.comb(a1 + a2, b1 + b2)
    return CheckResult("FACT_SUBADD", ok, cases, worst, worst_case, time.perf_counter() - t0)


def verify_geometric_tail(max_k: int = 200, ratios=(Fraction(1, 4), Fraction(1, 3), Fraction(1, 2))) -> CheckResult:
    """k r^k <= (1 - r)^(-1) for the listed r and 0 <= k <= max_k."""
    t0 = time.perf_counter()
    ok = True
    worst, worst_case = None, None
    for r in ratios:
        bound = 1 / (1 - r)
        for k in range(max_k + 1):
            lhs = k * r**k
            ok &= lhs <= bound
            slack = (bound - lhs) / bound
            if worst is None or slack < worst:
                worst, worst_case = slack, (str(r), k)
    return CheckResult("GEOM_TAIL", ok, len(ratios) * (max_k + 1), worst, worst_case, time.perf_counter() - t0)


# initial-data constant -----------------------------------------------------------------

@dataclass(frozen=True)
class InitBound:
    X0: float  # |a(0)|_{X_rho0}
    data_norm_2rho0: float  # ||u0||_{G,2rho0,ell} + ||u1||_{G,2rho0,ell+1}
    data_norm_rho0: float
    C0_emp: float
    converged: bool
    geometric_tail: CheckResult

    @property
    def verdict(self) -> str:
        return "certified" if self.converged and self.geometric_tail.passed else "inconclusive"


def verify_init_bound(u0, u1, rho0: float, eta: float = 1.0, Mmax: int | None = None,
                      Kmax: int | None = None) -> InitBound:
    """Ratio |a(0)|_{X_rho0} / (||u0||_{G,2rho0} + ||u1||_{G,2rho0}) from sampled data."""
    from .dynamics import make_initial_state
    from .norms import DEFAULT_KMAX, DEFAULT_MMAX, evaluate_norms, gevrey_space_norm

    Mmax = DEFAULT_MMAX if Mmax is None else Mmax
    Kmax = DEFAULT_KMAX if Kmax is None else Kmax
    ell = u0.grid.ell
    s = make_initial_state(u0, u1, eta)
    rep = evaluate_norms(s, rho0, Mmax, Kmax)
    n2 = [gevrey_space_norm(u0, 2 * rho0, ell, Mmax, Kmax), gevrey_space_norm(u1, 2 * rho0, ell + 1, Mmax, Kmax)]
    n1 = [gevrey_space_norm(u0, rho0, ell, Mmax, Kmax), gevrey_space_norm(u1, rho0, ell + 1, Mmax, Kmax)]
    data2 = n2[0].norm + n2[1].norm
    data1 = n1[0].norm + n1[1].norm
    C0 = rep.X / data2 if data2 > 0 else 0.0
    converged = rep.converged and all(r.converged or r.value == 0 for r in n2)
    return InitBound(rep.X, data2, data1, C0, converged, verify_geometric_tail())


# bulk runs -------------------------------------------------------------------------------

DEFAULT_RANGES = {"FE1": 200, "FE2": 200, "FE3": 200, "FE4": 200, "FE5": 200, "FE6": 200,
                  "FE10": 120, "LAETIMATE": 120}


def run_all(ids=None, ranges=None, rho=Fraction(1, 10), young_trials=10_000, fact_n=60, workers=None) -> dict:
    ids = list(IDS) + ["YOUNG_DIS", "FACT_SUBADD"] if ids is None else list(ids)
    ranges = {**DEFAULT_RANGES, **(ranges or {})}
    out = {}
    for ident in ids:
        if ident == "YOUNG_DIS":
            out[ident] = verify_young_dis(young_trials)
        elif ident == "FACT_SUBADD":
            out[ident] = verify_factorial_subadditivity(fact_n)
        else:
            out[ident] = verify(ident, ranges[ident], rho, workers)
    return out


def certificates_json(results: dict) -> str:
    return json.dumps({k: v.to_json() for k, v in results.items()}, indent=2)
