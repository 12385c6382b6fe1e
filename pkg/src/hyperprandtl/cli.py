"""Command line entry point: ``hyperprandtl <subcommand> ...``.

Exit codes: 0 holds/inconclusive (or success), 1 configuration or input error,
2 violated bootstrap or failed certificate, 3 blowup.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, monitor
from .errors import ConfigError, HyperPrandtlError

log = logging.getLogger("hyperprandtl")

EXIT_OK, EXIT_INPUT, EXIT_VIOLATED, EXIT_BLOWUP = 0, 1, 2, 3


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def cmd_simulate(args) -> int:
    from .config import load_config
    from .run import simulate

    cfg = load_config(args.config)
    out = Path(args.out)
    if out.exists() and any(out.iterdir()) and not args.force:
        log.error("run directory %s is not empty (use --force)", out)
        return EXIT_INPUT
    if not args.plots:
        cfg = dataclasses.replace(cfg, plots=False)
    res = simulate(cfg, out)
    s = res.summary
    print(f"verdict: {s['verdict']}  mu={res.mu:.6g}  T={s['T']:.6g}  steps={s['steps']}")
    if "conclusion" in s:
        c = s["conclusion"]
        print(f"X(0)={c['X0']:.6e}  sup X + (int Y^2)^1/2 = {c['S_T']:.6e}  budget={s['budget']:.6e}")
    print(f"run directory: {out}")
    return res.verdict.exit_code


def cmd_gen_ic(args) -> int:
    from .config import load_config
    from .initial_data import generate, store
    from .run import build_grid

    cfg = load_config(args.config)
    grid = build_grid(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for spec in (cfg.u0, cfg.u1):
        f = generate(spec, grid)
        store(out / f"{spec.which}.bin", f)
        print(f"{spec.which}: max |field| = {np.abs(f.values).max():.6e} -> {out / (spec.which + '.bin')}")
    return EXIT_OK


def cmd_gevrey_norm(args) -> int:
    from .grid import FieldGrid, ScalarField, read_field
    from .norms import gevrey_space_norm

    header, arr = read_field(args.field)
    grid = FieldGrid(header.Nx, header.Ny, header.Ymax, header.ell)
    ell = header.ell if args.ell is None else args.ell
    r = gevrey_space_norm(ScalarField(arr, grid), args.rho, ell, args.Mmax, args.Kmax, args.tail_tol)
    out = {"field": str(args.field), "rho": args.rho, "ell": ell, "Mmax": args.Mmax, "Kmax": args.Kmax,
           "norm": r.norm, "norm_sq": r.value, "tail_ratio_m": r.tail_ratio_m, "tail_ratio_k": r.tail_ratio_k,
           "noise_flags": sorted(r.noise_flags), "unresolved": r.unresolved, "converged": r.converged}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _parse_ranges(items) -> dict:
    out = {}
    for item in items or ():
        key, _, val = item.partition("=")
        if not val:
            raise ConfigError([f"--range expects ID=N, got {item!r}"])
        out[key.strip().upper()] = int(val)
    return out


def cmd_verify_appendix(args) -> int:
    from . import verifier

    known = list(verifier.IDS) + ["YOUNG_DIS", "FACT_SUBADD"]
    ids = known if not args.ids else [i.strip().upper() for i in args.ids.split(",")]
    bad = [i for i in ids if i not in known]
    if bad:
        raise ConfigError([f"unknown inequality id {b!r} (known: {', '.join(known)})" for b in bad])
    results = verifier.run_all(ids, _parse_ranges(args.range), args.rho, args.young_trials,
                               args.fact_n, args.workers)
    ok = True
    for ident, r in results.items():
        passed = r.passed
        ok &= passed
        if isinstance(r, verifier.InequalityCertificate):
            print(f"{ident:10s} {'PASS' if passed else 'FAIL'}  sup (LHS/g)^2 = {float(r.sup_ratio_sq):.6e} "
                  f"at {r.argmax}  monotone_tail={r.monotone_tail}  {r.wall_time:.1f}s")
        else:
            print(f"{ident:10s} {'PASS' if passed else 'FAIL'}  cases={r.cases}  "
                  f"min slack={float(r.min_slack):.3e}  {r.wall_time:.1f}s")
    if args.out:
        Path(args.out).write_text(verifier.certificates_json(results) + "\n")
    return EXIT_OK if ok else EXIT_VIOLATED


def cmd_check_apriori(args) -> int:
    run = Path(args.run_dir)
    meta = json.loads((run / "verdict.json").read_text())
    mu = args.mu if args.mu is not None else meta["mu"]
    led = monitor.read_ledger_csv(run / "ledger.csv", meta["C0_emp"], meta["data_norm_2rho0"])
    led.data_norm_rho0 = meta.get("data_norm_rho0") or 0.0
    if meta.get("kind") == "blowup":
        monitor.mark_blowup(led, meta["t"], meta.get("reason", ""))
    v = monitor.verdict(led, mu)
    out = {"verdict": str(v), "mu": mu, "samples": len(led)}
    if len(led):
        out["conclusion"] = monitor.conclusion_checks(led, args.rtol)
    if len(led) >= 3:
        fit = monitor.check_differential_inequality(led, mu)
        out.update(C_emp=fit.empirical_C, min_margin=float(fit.margin.min()),
                   min_closing_slack=float(fit.closing_slack.min()), noisy_derivative=fit.noisy)
        if args.C is not None:
            out["mu_policy"] = monitor.choose_mu(args.C, led.C0_emp, led.data_norm)
    print(json.dumps(out, indent=2))
    return v.exit_code


def cmd_diff(args) -> int:
    from .grid import FieldGrid, read_field, resample

    a, b = Path(args.run_a) / "fields", Path(args.run_b) / "fields"
    names_a = {p.name.split("_")[0]: p for p in sorted(a.glob("*.bin"))}
    names_b = {p.name.split("_")[0]: p for p in sorted(b.glob("*.bin"))}
    common = sorted(set(names_a) & set(names_b))
    if not common:
        raise ConfigError([f"no common field dumps under {a} and {b}"])
    out = {}
    for name in common:
        # last dump of each field in each run
        pa = sorted(a.glob(f"{name}_*.bin"))[-1]
        pb = sorted(b.glob(f"{name}_*.bin"))[-1]
        ha, va = read_field(pa)
        hb, vb = read_field(pb)
        if (ha.Nx, ha.Ny, ha.Ymax) != (hb.Nx, hb.Ny, hb.Ymax):
            ga = FieldGrid(ha.Nx, ha.Ny, ha.Ymax, ha.ell)
            gb = FieldGrid(hb.Nx, hb.Ny, hb.Ymax, hb.ell)
            vb = resample(vb, gb, ga)
        scale = float(np.abs(va).max())
        err = float(np.abs(va - vb).max())
        out[name] = {"t_a": ha.t, "t_b": hb.t, "max_abs_diff": err,
                     "max_rel_diff": err / scale if scale > 0 else err}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperprandtl", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a monitored simulation into a run directory")
    s.add_argument("config")
    s.add_argument("-o", "--out", required=True, help="run directory")
    s.add_argument("--force", action="store_true", help="write into a non-empty directory")
    s.add_argument("--no-plots", dest="plots", action="store_false")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("gen-ic", help="write u0.bin and u1.bin for a config")
    s.add_argument("config")
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_gen_ic)

    s = sub.add_parser("gevrey-norm", help="truncated Gevrey norm of a field file")
    s.add_argument("field")
    s.add_argument("--rho", type=float, required=True)
    s.add_argument("--ell", type=float, default=None, help="weight exponent (default: from the header)")
    s.add_argument("--Mmax", type=int, default=256)
    s.add_argument("--Kmax", type=int, default=12)
    s.add_argument("--tail-tol", dest="tail_tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_gevrey_norm)

    s = sub.add_parser("verify-appendix", help="exact certificates for the weight inequalities")
    s.add_argument("--ids", default="", help="comma-separated ids (default: all)")
    s.add_argument("--range", action="append", metavar="ID=N", help="level cap per id, repeatable")
    s.add_argument("--rho", type=_fraction, default=Fraction(1, 10))
    s.add_argument("--young-trials", dest="young_trials", type=int, default=10_000)
    s.add_argument("--fact-n", dest="fact_n", type=int, default=60)
    s.add_argument("--workers", type=int, default=None, help="worker processes (default: $HYPERPRANDTL_WORKERS or 1)")
    s.add_argument("-o", "--out", default=None, help="write certificates as JSON")
    s.set_defaults(func=cmd_verify_appendix)

    s = sub.add_parser("check-apriori", help="re-analyse a run directory's ledger offline")
    s.add_argument("run_dir")
    s.add_argument("--mu", type=float, default=None)
    s.add_argument("--C", type=float, default=None, help="report the mu policy for this C")
    s.add_argument("--rtol", type=float, default=1e-2)
    s.set_defaults(func=cmd_check_apriori)

    s = sub.add_parser("diff", help="max pointwise discrepancy between the final fields of two runs")
    s.add_argument("run_a")
    s.add_argument("run_b")
    s.set_defaults(func=cmd_diff)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, HyperPrandtlError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
