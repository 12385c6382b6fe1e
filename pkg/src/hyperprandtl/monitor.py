"""Bootstrap ledger for the a priori estimate along a simulated trajectory.

The monitored quantity is

    S(t) = sup_{s<=t} X(s) + (int_0^t Y^2)^(1/2)

compared with the bootstrap budget 2 C0 (||u0|| + ||u1||), the data norms taken
at radius 2 rho0.  The constants C0 and C are fitted from the run, never assumed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

TIME_TOL = 1e-12
BUDGET_RTOL = 1e-12
# a centered dX^2/dt whose sign flips more often than this is treated as noise
MAX_SIGN_FLIPS = 2
FLIP_FLOOR = 1e-3


@dataclass(frozen=True)
class Verdict:
    kind: str  # holds | violated | blowup | inconclusive
    t: float | None = None
    reason: str = ""

    def __str__(self):
        if self.kind == "violated":
            return f"violated_at({self.t:.6g})"
        if self.kind == "blowup":
            return f"blowup_at({self.t:.6g})"
        return self.kind

    @property
    def exit_code(self) -> int:
        return {"holds": 0, "inconclusive": 0, "violated": 2, "blowup": 3}[self.kind]


@dataclass
class BootstrapLedger:
    C0_emp: float = 0.0
    data_norm: float = 0.0  # ||u0||_{G,2rho0,ell} + ||u1||_{G,2rho0,ell+1}
    data_norm_rho0: float = 0.0  # same norms at rho0, logged for comparison
    unresolved_tol: float = 1e-6
    t: list = field(default_factory=list)
    X2: list = field(default_factory=list)
    Y2: list = field(default_factory=list)
    int_Y2: list = field(default_factory=list)
    sup_X: list = field(default_factory=list)
    unconverged: list = field(default_factory=list)  # times of reports with unresolved or tail trouble
    blowup_t: float | None = None
    blowup_reason: str = ""

    @property
    def budget(self) -> float:
        return 2.0 * self.C0_emp * self.data_norm

    @property
    def running(self) -> np.ndarray:
        """S(t) at every recorded sample."""
        return np.asarray(self.sup_X) + np.sqrt(np.asarray(self.int_Y2))

    def __len__(self):
        return len(self.t)


def fit_C0(X0: float, data_norm: float) -> float:
    """Smallest C0 with |a(0)|_X <= C0 * data_norm; 0/0 is 0 by convention."""
    if data_norm == 0.0:
        if X0 != 0.0:
            raise DomainError("nonzero initial norm from zero data")
        return 0.0
    return X0 / data_norm


def new_ledger(X0: float, data_norm: float, data_norm_rho0: float = 0.0,
               unresolved_tol: float = 1e-6) -> BootstrapLedger:
    return BootstrapLedger(fit_C0(X0, data_norm), data_norm, data_norm_rho0, unresolved_tol)


def record(ledger: BootstrapLedger, report_x, report_y) -> BootstrapLedger:
    """Append one (X, Y) sample; X from ``report_x``, Y from ``report_y``."""
    if abs(report_x.t - report_y.t) > TIME_TOL or abs(report_x.rho - report_y.rho) > TIME_TOL * report_x.rho:
        raise DomainError("X and Y reports disagree on (t, rho)")
    t = float(report_x.t)
    if ledger.t and not t > ledger.t[-1]:
        raise DomainError(f"sample time {t} does not follow {ledger.t[-1]}")
    X2, Y2 = float(report_x.X2), float(report_y.Y2)
    if ledger.t:
        inc = 0.5 * (Y2 + ledger.Y2[-1]) * (t - ledger.t[-1])
        ledger.int_Y2.append(ledger.int_Y2[-1] + inc)
        ledger.sup_X.append(max(ledger.sup_X[-1], math.sqrt(X2)))
    else:
        ledger.int_Y2.append(0.0)
        ledger.sup_X.append(math.sqrt(X2))
    ledger.t.append(t)
    ledger.X2.append(X2)
    ledger.Y2.append(Y2)
    bad = (report_x.unresolved > ledger.unresolved_tol * max(X2, np.finfo(float).tiny)
           or not report_x.converged)
    if bad:
        ledger.unconverged.append(t)
    return ledger


def mark_blowup(ledger: BootstrapLedger, t: float, reason: str = "") -> BootstrapLedger:
    ledger.blowup_t = float(t)
    ledger.blowup_reason = reason
    return ledger


@dataclass(frozen=True)
class InequalityFit:
    empirical_C: float
    C_samples: np.ndarray
    dX2dt: np.ndarray
    margin: np.ndarray  # (-mu + C (1 + X^4)) Y^2 - dX^2/dt / 2, with C = empirical_C
    closing_slack: np.ndarray  # -Y^2/2 - dX^2/dt / 2, the closed form of the estimate
    noisy: bool


def check_differential_inequality(ledger: BootstrapLedger, mu: float) -> InequalityFit:
    """Fit the smallest C with dX^2/dt / 2 <= (-mu + C + C X^4) Y^2 at every sample."""
    if len(ledger) < 3:
        raise DomainError("need at least 3 samples to difference dX^2/dt")
    t = np.asarray(ledger.t)
    X2 = np.asarray(ledger.X2)
    Y2 = np.asarray(ledger.Y2)
    d = np.gradient(X2, t, edge_order=2)
    half = 0.5 * d
    pos = Y2 > 0
    C = np.zeros_like(Y2)
    C[pos] = (half[pos] + mu * Y2[pos]) / (Y2[pos] * (1.0 + X2[pos] ** 2))
    C_emp = max(0.0, float(C.max())) if C.size else 0.0
    margin = (-mu + C_emp * (1.0 + X2**2)) * Y2 - half
    closing = -0.5 * Y2 - half

    scale = np.abs(d).max()
    big = d[np.abs(d) > FLIP_FLOOR * scale] if scale > 0 else d[:0]
    flips = int(np.count_nonzero(np.diff(np.sign(big)) != 0))
    return InequalityFit(C_emp, C, d, margin, closing, flips > MAX_SIGN_FLIPS)


def choose_mu(C_emp: float, C0_emp: float, data_norms: float) -> float:
    """Twice the smallest mu allowed by 1/2 + C + C (2 C0 data)^4."""
    return 2.0 * (0.5 + C_emp + C_emp * (2.0 * C0_emp * data_norms) ** 4)


def verdict(ledger: BootstrapLedger, mu: float | None = None) -> Verdict:
    if ledger.blowup_t is not None:
        return Verdict("blowup", ledger.blowup_t, ledger.blowup_reason)
    if not ledger.t:
        return Verdict("inconclusive", reason="no samples")
    S = ledger.running
    over = np.nonzero(S > ledger.budget * (1 + BUDGET_RTOL) + 1e-300)[0]
    if over.size:
        i = int(over[0])
        return Verdict("violated", ledger.t[i], f"S={S[i]:.6e} exceeds budget {ledger.budget:.6e}")
    if ledger.unconverged:
        return Verdict("inconclusive", reason=f"unresolved norm terms at t={ledger.unconverged[0]:.6g}")
    if mu is not None and len(ledger) >= 3 and check_differential_inequality(ledger, mu).noisy:
        return Verdict("inconclusive", reason="dX^2/dt estimate changes sign repeatedly")
    return Verdict("holds")


def conclusion_checks(ledger: BootstrapLedger, rtol: float = 1e-2) -> dict:
    """The decay conclusion compared with X(0), in its literal and energy forms.

    literal: sup X + (int Y^2)^(1/2) <= X(0) (1 + rtol)
    energy:  X(t)^2 + int_0^t Y^2 <= X(0)^2 (1 + rtol) for every t
    """
    X0 = math.sqrt(ledger.X2[0])
    S = float(ledger.running[-1])
    E = np.asarray(ledger.X2) + np.asarray(ledger.int_Y2)
    return {
        "X0": X0,
        "S_T": S,
        "literal_ratio": S / X0 if X0 > 0 else 0.0,
        "literal_holds": bool(S <= X0 * (1 + rtol)),
        "energy_ratio": float(E.max() / ledger.X2[0]) if X0 > 0 else 0.0,
        "energy_holds": bool(E.max() <= ledger.X2[0] * (1 + rtol)),
        "rtol": rtol,
    }


# export --------------------------------------------------------------------------

LEDGER_FIELDS = ["t", "X", "Y", "dX2dt", "margin", "closing_slack", "int_Y2", "sup_X", "C_sample"]


def write_ledger_csv(path, ledger: BootstrapLedger, mu: float):
    n = len(ledger)
    if n >= 3:
        fit = check_differential_inequality(ledger, mu)
        cols = (fit.dX2dt, fit.margin, fit.closing_slack, fit.C_samples)
    else:
        cols = tuple(np.full(n, np.nan) for _ in range(4))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LEDGER_FIELDS)
        for i in range(n):
            w.writerow([repr(ledger.t[i]), repr(math.sqrt(ledger.X2[i])), repr(math.sqrt(ledger.Y2[i])),
                        repr(float(cols[0][i])), repr(float(cols[1][i])), repr(float(cols[2][i])),
                        repr(ledger.int_Y2[i]), repr(ledger.sup_X[i]), repr(float(cols[3][i]))])


def read_ledger_csv(path, C0_emp=0.0, data_norm=0.0) -> BootstrapLedger:
    """Rebuild a ledger from its CSV export (X, Y columns); the integral is recomputed."""
    led = BootstrapLedger(C0_emp, data_norm)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            t = float(row["t"])
            X2, Y2 = float(row["X"]) ** 2, float(row["Y"]) ** 2
            if led.t:
                if not t > led.t[-1]:
                    raise DomainError(f"ledger times not increasing at t={t}")
                led.int_Y2.append(led.int_Y2[-1] + 0.5 * (Y2 + led.Y2[-1]) * (t - led.t[-1]))
                led.sup_X.append(max(led.sup_X[-1], math.sqrt(X2)))
            else:
                led.int_Y2.append(0.0)
                led.sup_X.append(math.sqrt(X2))
            led.t.append(t)
            led.X2.append(X2)
            led.Y2.append(Y2)
    return led


def verdict_json(ledger: BootstrapLedger, mu: float, extra: dict | None = None) -> dict:
    v = verdict(ledger, mu)
    out = {
        "verdict": str(v), "kind": v.kind, "t": v.t, "reason": v.reason,
        "mu": mu, "C0_emp": ledger.C0_emp, "data_norm_2rho0": ledger.data_norm,
        "data_norm_rho0": ledger.data_norm_rho0,
        "data_norm_ratio": (ledger.data_norm / ledger.data_norm_rho0) if ledger.data_norm_rho0 > 0 else None,
        "budget": ledger.budget, "samples": len(ledger),
    }
    if ledger.t:
        out["S_T"] = float(ledger.running[-1])
        out["conclusion"] = conclusion_checks(ledger)
    if len(ledger) >= 3:
        fit = check_differential_inequality(ledger, mu)
        out["C_emp"] = fit.empirical_C
        out["min_closing_slack"] = float(fit.closing_slack.min())
        out["noisy_derivative"] = fit.noisy
    if extra:
        out.update(extra)
    return out


def write_plot(path, ledger: BootstrapLedger, mu: float):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = np.asarray(ledger.t)
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    axes[0].semilogy(t, np.sqrt(ledger.X2), label="X")
    axes[0].semilogy(t, np.sqrt(ledger.Y2), label="Y")
    axes[0].semilogy(t, ledger.running, label="sup X + (int Y^2)^1/2")
    if ledger.budget > 0:
        axes[0].axhline(ledger.budget, color="k", ls="--", lw=0.8, label="budget")
    axes[0].legend(fontsize=8)
    if len(ledger) >= 3:
        fit = check_differential_inequality(ledger, mu)
        axes[1].plot(t, fit.closing_slack, label="-Y^2/2 - dX^2/dt/2")
        axes[1].axhline(0.0, color="k", lw=0.6)
        axes[1].legend(fontsize=8)
    axes[1].set_xlabel("t")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
