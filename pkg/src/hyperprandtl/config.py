"""Run configuration: an INI file with sections [grid] [model] [schedule] [u0] [u1]
[norms] [output] [run].  Every problem is collected before anything is allocated.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .grid import validate_grid_params
from .initial_data import FAMILIES, PROFILES, DataSpec

DEFAULTS = {
    "grid": {"Nx": "64", "Ny": "96", "Ymax": "20.0"},
    "model": {"eta": "1.0", "ell": "2.0"},
    "schedule": {"rho0": "0.1", "mu": "auto", "T": "", "pilot_mu": "1.0", "pilot_T": ""},
    "u0": {"family": "single_mode", "amplitude": "1e-3", "x_modes": "1:0", "y_profile": "y3_gauss", "path": ""},
    "u1": {"family": "single_mode", "amplitude": "0", "x_modes": "1:0", "y_profile": "y3_gauss", "path": ""},
    "norms": {"Mmax": "256", "Kmax": "12", "tail_tol": "1e-6"},
    "output": {"norm_every": "1", "field_every": "0", "plots": "yes"},
    "run": {"seed": "0", "dt": "auto", "cfl_safety": "0.5", "min_steps": "50"},
}


def parse_modes(text: str) -> tuple:
    """'1:0, 3:0.5' -> ((1, 0.0), (3, 0.5))."""
    out = []
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        k, _, phase = item.partition(":")
        out.append((int(k), float(phase or 0.0)))
    return tuple(out)


def format_modes(modes) -> str:
    return ", ".join(f"{k}:{phase!r}" for k, phase in modes)


@dataclass(frozen=True)
class RunConfig:
    Nx: int = 64
    Ny: int = 96
    Ymax: float = 20.0
    eta: float = 1.0
    ell: float = 2.0
    rho0: float = 0.1
    mu: float | str = "auto"
    T: float | None = None
    pilot_mu: float = 1.0
    pilot_T: float | None = None
    u0: DataSpec = field(default_factory=lambda: DataSpec(amplitude=1e-3, y_profile="y3_gauss", which="u0"))
    u1: DataSpec = field(default_factory=lambda: DataSpec(amplitude=0.0, y_profile="y3_gauss", which="u1"))
    Mmax: int = 256
    Kmax: int = 12
    tail_tol: float = 1e-6
    norm_every: int = 1
    field_every: int = 0
    plots: bool = True
    seed: int = 0
    dt: float | str = "auto"
    cfl_safety: float = 0.5
    min_steps: int = 50  # auto dt resolves the radius decay: dt <= T / min_steps

    def problems(self) -> list[str]:
        out = validate_grid_params(self.Nx, self.Ny, self.Ymax, self.ell)
        if not (0.05 <= self.eta <= 1):
            out.append(f"model.eta must lie in [0.05, 1], got {self.eta}")
        if not (self.rho0 > 0 and math.isfinite(self.rho0)):
            out.append(f"schedule.rho0 must be positive, got {self.rho0}")
        if self.mu != "auto" and not (isinstance(self.mu, float) and self.mu >= 1):
            out.append(f"schedule.mu must be 'auto' or a number >= 1, got {self.mu}")
        if self.T is not None and not self.T > 0:
            out.append(f"schedule.T must be positive, got {self.T}")
        if not self.pilot_mu >= 1:
            out.append(f"schedule.pilot_mu must be >= 1, got {self.pilot_mu}")
        if self.pilot_T is not None and not self.pilot_T > 0:
            out.append(f"schedule.pilot_T must be positive, got {self.pilot_T}")
        for spec in (self.u0, self.u1):
            out += [f"[{spec.which}] {p}" for p in spec.problems()]
            if spec.family != "custom_file":
                for k, _ in spec.x_modes:
                    if self.Nx >= 4 and k > self.Nx // 2 - 1:
                        out.append(f"[{spec.which}] mode {k} not representable with Nx={self.Nx}")
        if self.Mmax < 1 or self.Kmax < 1:
            out.append("norms.Mmax and norms.Kmax must be >= 1")
        if not (0 < self.tail_tol < 1):
            out.append(f"norms.tail_tol must lie in (0, 1), got {self.tail_tol}")
        if self.norm_every < 1:
            out.append("output.norm_every must be >= 1")
        if self.field_every < 0:
            out.append("output.field_every must be >= 0")
        if self.dt != "auto" and not (isinstance(self.dt, float) and self.dt > 0):
            out.append(f"run.dt must be 'auto' or positive, got {self.dt}")
        if not (0 < self.cfl_safety <= 1):
            out.append(f"run.cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.min_steps < 3:
            out.append("run.min_steps must be >= 3")
        return out

    def validate(self) -> "RunConfig":
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["grid"] = {"Nx": str(self.Nx), "Ny": str(self.Ny), "Ymax": repr(self.Ymax)}
        cp["model"] = {"eta": repr(self.eta), "ell": repr(self.ell)}
        cp["schedule"] = {"rho0": repr(self.rho0), "mu": self.mu if self.mu == "auto" else repr(self.mu),
                          "T": "" if self.T is None else repr(self.T), "pilot_mu": repr(self.pilot_mu),
                          "pilot_T": "" if self.pilot_T is None else repr(self.pilot_T)}
        for spec in (self.u0, self.u1):
            cp[spec.which] = {"family": spec.family, "amplitude": repr(spec.amplitude),
                              "x_modes": format_modes(spec.x_modes), "y_profile": spec.y_profile,
                              "path": spec.path or ""}
        cp["norms"] = {"Mmax": str(self.Mmax), "Kmax": str(self.Kmax), "tail_tol": repr(self.tail_tol)}
        cp["output"] = {"norm_every": str(self.norm_every), "field_every": str(self.field_every),
                        "plots": "yes" if self.plots else "no"}
        cp["run"] = {"seed": str(self.seed), "dt": self.dt if self.dt == "auto" else repr(self.dt),
                     "cfl_safety": repr(self.cfl_safety), "min_steps": str(self.min_steps)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _parse(cp: configparser.ConfigParser, problems: list) -> dict:
    vals = {}

    def get(section, key, conv, dest=None, allow=()):
        raw = cp.get(section, key, fallback=DEFAULTS[section][key]).strip()
        if raw in allow:
            vals[dest or key] = raw
            return
        try:
            vals[dest or key] = conv(raw)
        except (TypeError, ValueError):
            problems.append(f"{section}.{key}: cannot parse {raw!r}")

    def opt_float(raw):
        return None if raw == "" else float(raw)

    def yesno(raw):
        low = raw.lower()
        if low in ("yes", "true", "on", "1"):
            return True
        if low in ("no", "false", "off", "0"):
            return False
        raise ValueError(raw)

    get("grid", "Nx", int)
    get("grid", "Ny", int)
    get("grid", "Ymax", float)
    get("model", "eta", float)
    get("model", "ell", float)
    get("schedule", "rho0", float)
    get("schedule", "mu", float, allow=("auto",))
    get("schedule", "T", opt_float)
    get("schedule", "pilot_mu", float)
    get("schedule", "pilot_T", opt_float)
    get("norms", "Mmax", int)
    get("norms", "Kmax", int)
    get("norms", "tail_tol", float)
    get("output", "norm_every", int)
    get("output", "field_every", int)
    get("output", "plots", yesno)
    get("run", "seed", int)
    get("run", "dt", float, allow=("auto",))
    get("run", "cfl_safety", float)
    get("run", "min_steps", int)

    for which in ("u0", "u1"):
        sec = DEFAULTS[which]
        family = cp.get(which, "family", fallback=sec["family"]).strip()
        profile = cp.get(which, "y_profile", fallback=sec["y_profile"]).strip()
        try:
            amp = float(cp.get(which, "amplitude", fallback=sec["amplitude"]))
        except ValueError:
            problems.append(f"{which}.amplitude: not a number")
            amp = 0.0
        try:
            modes = parse_modes(cp.get(which, "x_modes", fallback=sec["x_modes"]))
        except ValueError:
            problems.append(f"{which}.x_modes: expected 'k:phase, k:phase'")
            modes = ((1, 0.0),)
        path = cp.get(which, "path", fallback="").strip() or None
        if family not in FAMILIES:
            problems.append(f"{which}.family: expected one of {', '.join(FAMILIES)}, got {family!r}")
            family = "single_mode"
        if family != "custom_file" and profile not in PROFILES:
            problems.append(f"{which}.y_profile: expected one of {', '.join(PROFILES)}, got {profile!r}")
            profile = "y3_gauss"
        vals[which] = DataSpec(family, amp, modes, profile, which, path=path)
    return vals


KNOWN_SECTIONS = set(DEFAULTS)


def parse_config(text: str) -> RunConfig:
    """Parse and validate; raise ConfigError listing every problem."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    problems = []
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"unreadable config: {exc}"]) from None
    for sec in cp.sections():
        if sec not in KNOWN_SECTIONS:
            problems.append(f"unknown section [{sec}]")
            continue
        for key in cp[sec]:
            if key not in DEFAULTS[sec]:
                problems.append(f"{sec}.{key}: unknown key")
    vals = _parse(cp, problems)
    # unparseable keys fall back to defaults so semantic checks still run on the rest
    cfg = RunConfig(**vals)
    problems += cfg.problems()
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())
