"""Compatible initial data families and field file I/O."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .errors import FieldFormatError, IncompatibleDataError
from .grid import FieldGrid, ScalarField, read_field, write_field

PROFILES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "y_exp": lambda y: y * np.exp(-y),
    "y2_exp": lambda y: y**2 * np.exp(-y),
    # odd in y with vanishing first derivative at the wall: compatible to higher order
    "y3_gauss": lambda y: y**3 * np.exp(-y * y),
}
FAMILIES = ("single_mode", "mode_sum", "custom_file")


@dataclass(frozen=True)
class DataSpec:
    """eps * sum_j sin(k_j x + phase_j) * profile(y).

    ``custom_profile`` (a callable of y) is used when ``y_profile == "custom"``;
    ``path`` names the field file for ``family == "custom_file"``.
    """

    family: str = "single_mode"
    amplitude: float = 0.0
    x_modes: tuple = ((1, 0.0),)
    y_profile: str = "y_exp"
    which: str = "u0"
    custom_profile: Callable | None = field(default=None, compare=False)
    path: str | None = None

    def problems(self) -> list[str]:
        out = []
        if self.family not in FAMILIES:
            out.append(f"{self.which}: unknown family {self.family!r}")
        if self.which not in ("u0", "u1"):
            out.append(f"unknown data slot {self.which!r}")
        if self.family == "custom_file":
            if not self.path:
                out.append(f"{self.which}: custom_file needs a path")
            return out
        if self.y_profile not in PROFILES and self.y_profile != "custom":
            out.append(f"{self.which}: unknown y_profile {self.y_profile!r}")
        if self.y_profile == "custom" and self.custom_profile is None:
            out.append(f"{self.which}: custom y_profile needs a callable")
        if self.family == "single_mode" and len(self.x_modes) != 1:
            out.append(f"{self.which}: single_mode takes exactly one (wavenumber, phase)")
        for mode in self.x_modes:
            if len(mode) != 2 or int(mode[0]) != mode[0] or mode[0] < 0:
                out.append(f"{self.which}: bad mode {mode!r}")
        return out

    @property
    def max_mode(self) -> int:
        return max((int(k) for k, _ in self.x_modes), default=0)


def generate(spec: DataSpec, grid: FieldGrid) -> ScalarField:
    problems = spec.problems()
    if problems:
        raise ValueError("; ".join(problems))
    if spec.family == "custom_file":
        return load(spec.path, grid)
    for k, _ in spec.x_modes:
        if k > grid.Nx // 2 - 1:
            raise ValueError(f"{spec.which}: mode {k} not representable with Nx={grid.Nx}")
    profile = PROFILES.get(spec.y_profile, spec.custom_profile)
    py = np.asarray(profile(grid.ys), dtype=float)
    if py[0] != 0.0:
        raise IncompatibleDataError(f"{spec.which}: y-profile has boundary trace {py[0]:.3e} at y=0",
                                    residual=abs(float(py[0])))
    if spec.amplitude == 0.0:
        return ScalarField.zeros(grid)
    px = np.zeros(grid.Nx)
    for k, phase in spec.x_modes:
        px += np.sin(k * grid.xs + phase)
    return ScalarField(spec.amplitude * np.outer(px, py), grid)


def band_limit_residual(f: ScalarField, max_mode: int) -> float:
    """Largest Fourier coefficient magnitude above ``max_mode``."""
    coef = np.abs(sfft.rfft(f.values, axis=0))[max_mode + 1:]
    return float(coef.max(initial=0.0))


def store(path, f: ScalarField, t: float = 0.0):
    write_field(path, f.values, f.grid, t)


def load(path, grid: FieldGrid) -> ScalarField:
    header, arr = read_field(path)
    if (header.Nx, header.Ny, header.Ymax, header.ell) != grid.header_tuple():
        active = "Nx={} Ny={} Ymax={} ell={}".format(*grid.header_tuple())
        raise FieldFormatError(f"{Path(path).name}: header mismatch\n  file:   {header.describe()}\n"
                               f"  active: {active}")
    return ScalarField(arr, grid)
