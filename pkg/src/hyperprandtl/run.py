"""End-to-end driver: data, optional pilot for mu, monitored run, run directory."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import monitor
from .config import RunConfig
from .dynamics import StateSnapshot, TimeStepper, cfl_limit, integrate, make_initial_state
from .errors import BlowupError
from .grid import FieldGrid, write_field
from .initial_data import generate
from .norms import CSV_FIELDS, evaluate_norms, gevrey_space_norm, tangential_u_check
from .weights import RadiusSchedule, radius_at

log = logging.getLogger(__name__)

DIAG_FIELDS = ["t", "lam_defect_rel", "divergence_rel", "u_wall", "phi_wall", "u_top", "phi_top", "v_wall"]
TANGENTIAL_FIELDS = ["t", "C_u", "C_uY", "C_v", "C_vY"]


@dataclass
class Trajectory:
    """Everything recorded along one monitored integration."""

    schedule: RadiusSchedule
    ledger: monitor.BootstrapLedger
    norm_rows: list
    diag_rows: list
    tangential_rows: list
    final: StateSnapshot | None
    dt: float


@dataclass
class RunResult:
    config: RunConfig
    mu: float
    trajectory: Trajectory
    verdict: monitor.Verdict
    summary: dict
    run_dir: Path | None = None


def build_grid(cfg: RunConfig) -> FieldGrid:
    return FieldGrid(cfg.Nx, cfg.Ny, cfg.Ymax, cfg.ell)


def data_norms(u0, u1, rho0: float, cfg: RunConfig) -> tuple[float, float]:
    """(||u0||_{G,2rho0,ell} + ||u1||_{G,2rho0,ell+1}, same at rho0)."""
    ell = u0.grid.ell
    out = []
    for rho in (2 * rho0, rho0):
        a = gevrey_space_norm(u0, rho, ell, cfg.Mmax, cfg.Kmax, cfg.tail_tol)
        b = gevrey_space_norm(u1, rho, ell + 1, cfg.Mmax, cfg.Kmax, cfg.tail_tol)
        out.append(a.norm + b.norm)
    return out[0], out[1]


def _diag_row(s: StateSnapshot) -> dict:
    lam_norm = math.sqrt(s.grid.l2_squared(s.lam.values))
    row = {"t": repr(s.t), "lam_defect_rel": repr(s.lam_defect / lam_norm if lam_norm > 0 else s.lam_defect),
           "divergence_rel": repr(s.divergence_residual())}
    row.update({k: repr(v) for k, v in s.boundary_residual().items()})
    return row


def monitored_run(s0: StateSnapshot, cfg: RunConfig, mu: float, T: float | None, data_norm: float,
                  data_norm_rho0: float, field_sink=None, dt: float | None = None) -> Trajectory:
    """Integrate over [0, T] with norms at rho(t) = rho0 exp(-mu t) recorded every ``norm_every`` steps."""
    sched = RadiusSchedule(cfg.rho0, mu, T)
    if dt is None:
        # the weights decay like exp(-mu (m+k+1) t): sampling must resolve that, not just the CFL bound
        dt = cfg.dt if cfg.dt != "auto" else min(cfg.cfl_safety * cfl_limit(s0), sched.T / cfg.min_steps)
    stepper = TimeStepper(dt=dt, t_end=sched.T, cfl_safety=cfg.cfl_safety)
    rep0 = evaluate_norms(s0, cfg.rho0, cfg.Mmax, cfg.Kmax, cfg.tail_tol)
    ledger = monitor.new_ledger(rep0.X, data_norm, data_norm_rho0, cfg.tail_tol)
    traj = Trajectory(sched, ledger, [], [], [], None, dt)
    n_steps = max(1, math.ceil(sched.T / dt - 1e-9))

    def callback(i, s):
        traj.final = s
        last = i == n_steps
        if field_sink is not None:
            field_sink(i, s, last)
        if i % cfg.norm_every and not last:
            return
        rho = radius_at(sched, min(s.t, sched.T))
        rep = rep0 if i == 0 else evaluate_norms(s, rho, cfg.Mmax, cfg.Kmax, cfg.tail_tol)
        monitor.record(ledger, rep, rep)
        traj.norm_rows.append(rep.csv_row())
        traj.diag_rows.append(_diag_row(s))
        tc = tangential_u_check(s, rho, rep, cfg.Mmax, cfg.Kmax)
        traj.tangential_rows.append({"t": repr(s.t), **{k: repr(v) for k, v in tc.constants().items()}})

    try:
        integrate(s0, stepper, callback=callback)
    except BlowupError as exc:
        t = exc.t if exc.t is not None else (ledger.t[-1] if ledger.t else 0.0)
        monitor.mark_blowup(ledger, t, str(exc))
        log.warning("blowup: %s", exc)
    return traj


def pilot_mu(s0: StateSnapshot, cfg: RunConfig, data_norm: float, data_norm_rho0: float) -> tuple[float, dict]:
    """Fit C from a run at ``pilot_mu`` and apply the mu policy."""
    traj = monitored_run(s0, cfg, cfg.pilot_mu, cfg.pilot_T, data_norm, data_norm_rho0)
    led = traj.ledger
    if led.blowup_t is not None or len(led) < 3:
        C_emp = 0.0 if led.blowup_t is None else math.inf
    else:
        C_emp = monitor.check_differential_inequality(led, cfg.pilot_mu).empirical_C
    if not math.isfinite(C_emp):
        mu = cfg.pilot_mu
    else:
        mu = max(1.0, monitor.choose_mu(C_emp, led.C0_emp, data_norm))
    info = {"pilot_mu": cfg.pilot_mu, "pilot_T": traj.schedule.T, "pilot_C_emp": C_emp,
            "pilot_verdict": str(monitor.verdict(led, cfg.pilot_mu)), "mu_policy": mu}
    return mu, info


def _write_csv(path: Path, fields: list, rows: list):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def simulate(cfg: RunConfig, run_dir=None) -> RunResult:
    """Run the configured experiment; with ``run_dir`` set, write the run directory."""
    cfg.validate()
    grid = build_grid(cfg)
    u0 = generate(cfg.u0, grid)
    u1 = generate(cfg.u1, grid)
    s0 = make_initial_state(u0, u1, cfg.eta)
    d2, d1 = data_norms(u0, u1, cfg.rho0, cfg)

    extra = {}
    if cfg.mu == "auto":
        mu, extra = pilot_mu(s0, cfg, d2, d1)
    else:
        mu = float(cfg.mu)

    out = None
    sink = None
    if run_dir is not None:
        out = Path(run_dir)
        (out / "fields").mkdir(parents=True, exist_ok=True)
        (out / "config.ini").write_text(cfg.to_ini())

        def sink(i, s, last):
            if i == 0 or last or (cfg.field_every and i % cfg.field_every == 0):
                for name, f in (("u", s.u), ("phi", s.phi), ("f", s.f), ("lam", s.lam_evolved)):
                    write_field(out / "fields" / f"{name}_{i:06d}.bin", f.values, grid, s.t)

    traj = monitored_run(s0, cfg, mu, cfg.T, d2, d1, field_sink=sink)
    v = monitor.verdict(traj.ledger, mu)
    summary = monitor.verdict_json(traj.ledger, mu, {
        "regime": traj.schedule.regime,
        "T": traj.schedule.T, "dt": traj.dt, "steps": len(traj.diag_rows), **extra,
    })
    if traj.tangential_rows:
        arr = np.array([[float(r[k]) for k in TANGENTIAL_FIELDS[1:]] for r in traj.tangential_rows])
        summary["tangential_constants_max"] = dict(zip(TANGENTIAL_FIELDS[1:], arr.max(axis=0).tolist()))
        summary["tangential_constants_min"] = dict(zip(TANGENTIAL_FIELDS[1:], arr.min(axis=0).tolist()))

    if out is not None:
        _write_csv(out / "norms.csv", CSV_FIELDS, traj.norm_rows)
        _write_csv(out / "diagnostics.csv", DIAG_FIELDS, traj.diag_rows)
        _write_csv(out / "tangential.csv", TANGENTIAL_FIELDS, traj.tangential_rows)
        monitor.write_ledger_csv(out / "ledger.csv", traj.ledger, mu)
        (out / "verdict.json").write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
        if cfg.plots:
            monitor.write_plot(out / "plots.svg", traj.ledger, mu)
    return RunResult(cfg, mu, traj, v, summary, out)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o).__name__)
