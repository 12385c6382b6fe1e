import csv
import json

import pytest

from hyperprandtl.cli import main

SMALL = """[grid]
Nx = 16
Ny = 96
[schedule]
mu = {mu}
[u0]
amplitude = {amp}
[norms]
Mmax = 48
[output]
plots = {plots}
[run]
min_steps = 12
"""


def write(tmp_path, name="run.ini", mu="8", amp="1e-3", plots="no"):
    p = tmp_path / name
    p.write_text(SMALL.format(mu=mu, amp=amp, plots=plots))
    return p


def test_simulate_zero_data(tmp_path, capsys):
    cfg = write(tmp_path, amp="0")
    assert main(["simulate", str(cfg), "-o", str(tmp_path / "run")]) == 0
    out = capsys.readouterr().out
    assert "verdict: holds" in out
    with open(tmp_path / "run" / "norms.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and all(float(r["X2"]) == 0.0 for r in rows)


def test_simulate_run_dir_and_reanalysis(tmp_path, capsys):
    cfg = write(tmp_path, plots="yes")
    run = tmp_path / "run"
    assert main(["simulate", str(cfg), "-o", str(run)]) == 0
    names = {p.name for p in run.iterdir()}
    assert {"config.ini", "fields", "norms.csv", "diagnostics.csv", "tangential.csv", "ledger.csv",
            "verdict.json", "plots.svg"} <= names
    meta = json.loads((run / "verdict.json").read_text())
    assert meta["verdict"] == "holds" and meta["mu"] == 8.0
    assert sorted(p.name for p in (run / "fields").glob("u_*.bin"))[0] == "u_000000.bin"
    capsys.readouterr()
    assert main(["check-apriori", str(run), "--C", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["verdict"] == "holds" and out["samples"] == meta["samples"]
    assert out["C_emp"] == pytest.approx(meta["C_emp"], rel=1e-9, abs=1e-12)
    # non-empty run dir without --force
    assert main(["simulate", str(cfg), "-o", str(run)]) == 1


def test_deterministic_and_diff(tmp_path, capsys):
    cfg = write(tmp_path)
    assert main(["simulate", str(cfg), "-o", str(tmp_path / "a")]) == 0
    assert main(["simulate", str(cfg), "-o", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "norms.csv").read_bytes() == (tmp_path / "b" / "norms.csv").read_bytes()
    capsys.readouterr()
    assert main(["diff", str(tmp_path / "a"), str(tmp_path / "b")]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["u"]["max_abs_diff"] == 0.0


def test_invalid_config_creates_nothing(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[grid]\nNy = 0\n[model]\neta = 7\n")
    out = tmp_path / "never"
    assert main(["simulate", str(p), "-o", str(out)]) == 1
    err = capsys.readouterr().err
    assert "Ny" in err and "eta" in err
    assert not out.exists()
    assert main(["simulate", str(tmp_path / "missing.ini"), "-o", str(out)]) == 1


def test_gen_ic_and_gevrey_norm(tmp_path, capsys):
    cfg = write(tmp_path)
    assert main(["gen-ic", str(cfg), "-o", str(tmp_path / "ic")]) == 0
    capsys.readouterr()
    assert main(["gevrey-norm", str(tmp_path / "ic" / "u0.bin"), "--rho", "0.1", "--Mmax", "32"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["norm"] > 0 and out["converged"]
    assert main(["gevrey-norm", str(tmp_path / "nothing.bin"), "--rho", "0.1"]) == 1


def test_verify_appendix(tmp_path, capsys):
    out = tmp_path / "cert.json"
    rc = main(["verify-appendix", "--ids", "fe1,fe3,young_dis", "--range", "FE1=20", "--range", "FE3=20",
               "--young-trials", "20", "-o", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert text.count("PASS") == 3
    data = json.loads(out.read_text())
    assert set(data) == {"FE1", "FE3", "YOUNG_DIS"}
    assert main(["verify-appendix", "--ids", "FE99"]) == 1
    assert main(["verify-appendix", "--ids", "FE1", "--range", "FE1"]) == 1
