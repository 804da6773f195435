"""Frequency sweeps, figure presets, CSV output, and noise validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analytics import estimated_probability
from .config import DEFAULT_SEED, SweepSpec
from .dynamics import SystemParams, TimeGrid
from .ensemble import EnsembleConfig, PhaseMode, derive_seed, run_ensemble
from .noise import (
    DeterministicPhaseParams,
    NoiseParams,
    analytic_spectrum,
    empirical_spectrum,
    generate_path,
    spectrum_peak,
)

__all__ = [
    "SweepRow",
    "CSV_HEADER",
    "run_sweep",
    "saturation_value",
    "emit_csv",
    "read_csv",
    "format_rows",
    "NoiseValidationSummary",
    "validate_noise",
    "preset_sweeps",
    "PRESET_NAMES",
]

CSV_HEADER = "omega0,mean,std_error,n,p_est,delta_e_eff"

DEFAULT_SATURATION_WINDOW = (3.0, 6.0)


@dataclass(frozen=True)
class SweepRow:
    """One sweep grid point with its ensemble statistics and estimates."""

    omega0: float
    mean: float
    std_error: float
    n: int
    p_est: float
    delta_e_eff: float

    def __post_init__(self):
        values = (self.omega0, self.mean, self.std_error, self.p_est, self.delta_e_eff)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"non-finite sweep row {values}")
        if not 0.0 <= self.mean <= 1.0:
            raise ValueError(f"mean must be in [0, 1], got {self.mean}")


def _phase_params(spec: SweepSpec, omega0: float):
    if spec.mode is PhaseMode.HARMONIC_NOISE:
        return NoiseParams(gamma=spec.gamma, omega0=omega0, var_phi=spec.var_phi)
    return DeterministicPhaseParams.from_variance(spec.var_phi, omega0, spec.phi0)


def run_sweep(spec: SweepSpec, *, on_row=None) -> list[SweepRow]:
    """Run the ensemble at every grid frequency, in ascending order.

    ``on_row`` (if given) is called with each finished row, which lets the
    CLI flush partial results before a late failure aborts the sweep.
    """
    estimate = estimated_probability(spec.system, spec.var_phi)
    config = EnsembleConfig(
        n_realizations=spec.realizations,
        master_seed=spec.master_seed,
        phase_mode=spec.mode,
    )
    rows = []
    for omega0 in spec.omega0_values:
        stats = run_ensemble(
            spec.system,
            spec.grid,
            _phase_params(spec, float(omega0)),
            config,
            workers=spec.workers,
            tail_fraction=spec.tail_fraction,
        )
        row = SweepRow(
            omega0=float(omega0),
            mean=stats.mean,
            std_error=stats.std_error,
            n=stats.n,
            p_est=estimate.p_est,
            delta_e_eff=estimate.delta_e_eff,
        )
        rows.append(row)
        if on_row is not None:
            on_row(row)
    return rows


def saturation_value(rows, window=DEFAULT_SATURATION_WINDOW) -> float:
    """Mean transition probability over a high-frequency window.

    Requires at least five rows inside the (closed) window.
    """
    lo, hi = window
    if not lo < hi:
        raise ValueError(f"need a non-empty window, got [{lo}, {hi}]")
    inside = [r.mean for r in rows if lo <= r.omega0 <= hi]
    if len(inside) < 5:
        raise ValueError(f"only {len(inside)} rows inside [{lo}, {hi}], need >= 5")
    return float(np.mean(inside))


def _format_value(x: float) -> str:
    return f"{x:.12g}"


def format_rows(rows) -> list[str]:
    lines = []
    for r in rows:
        lines.append(
            f"{_format_value(r.omega0)},{_format_value(r.mean)},{_format_value(r.std_error)},"
            f"{r.n},{_format_value(r.p_est)},{_format_value(r.delta_e_eff)}"
        )
    return lines


def emit_csv(rows, destination, metadata: dict | None = None) -> None:
    """Write sweep rows as CSV (12 significant digits, '#' metadata lines)."""
    path = Path(destination)
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            for key, value in (metadata or {}).items():
                fh.write(f"# {key} = {value}\n")
            fh.write(CSV_HEADER + "\n")
            for line in format_rows(rows):
                fh.write(line + "\n")
    except OSError as err:
        raise OSError(f"cannot write CSV to '{path}': {err}") from err


def read_csv(source) -> list[SweepRow]:
    """Parse a CSV produced by :func:`emit_csv` (round-trip helper)."""
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise OSError(f"cannot read CSV from '{path}': {err}") from err
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"'{path}' does not start with the expected header '{CSV_HEADER}'")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 6:
            raise ValueError(f"malformed CSV row: {ln!r}")
        rows.append(SweepRow(
            omega0=float(parts[0]),
            mean=float(parts[1]),
            std_error=float(parts[2]),
            n=int(parts[3]),
            p_est=float(parts[4]),
            delta_e_eff=float(parts[5]),
        ))
    return rows


@dataclass(frozen=True)
class NoiseValidationSummary:
    """Spectrum and variance checks of generated noise paths."""

    var_target: float
    var_empirical: float
    var_std_error: float
    peak_analytic: float
    peak_empirical: float
    bin_width: float

    def variance_ok(self, n_sigma: float = 3.0) -> bool:
        return abs(self.var_empirical - self.var_target) <= n_sigma * self.var_std_error

    def peak_ok(self) -> bool:
        return abs(self.peak_empirical - self.peak_analytic) <= self.bin_width


def validate_noise(
    params: NoiseParams,
    duration: float,
    n_paths: int,
    output=None,
    *,
    h: float = 0.05,
    master_seed: int = DEFAULT_SEED,
) -> NoiseValidationSummary:
    """Generate paths, compare their spectrum and variance to closed forms.

    Writes ``omega,S_empirical,S_analytic`` rows (non-negative frequencies)
    plus a '#' summary header when ``output`` is given.  Requires
    ``gamma > 0``: the undamped process has no spectral density function.
    """
    if params.gamma == 0.0:
        raise ValueError("noise validation needs gamma > 0 (no stationary spectrum at gamma = 0)")
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    paths = [
        generate_path(params, 0.0, duration, h, derive_seed(master_seed, i))
        for i in range(n_paths)
    ]
    omega, density = empirical_spectrum(paths)
    per_path_var = np.array([np.mean(p.phi**2) for p in paths])
    var_emp = float(np.mean(per_path_var))
    var_se = float(np.std(per_path_var, ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
    nonneg = omega >= 0.0
    omega_pos = omega[nonneg]
    density_pos = density[nonneg]
    peak_emp = float(omega_pos[np.argmax(density_pos)])
    summary = NoiseValidationSummary(
        var_target=params.var_phi,
        var_empirical=var_emp,
        var_std_error=var_se,
        peak_analytic=spectrum_peak(params),
        peak_empirical=peak_emp,
        bin_width=float(omega_pos[1] - omega_pos[0]) if omega_pos.size > 1 else 0.0,
    )
    if output is not None:
        path = Path(output)
        analytic = analytic_spectrum(params, omega_pos)
        try:
            with path.open("w", encoding="utf-8", newline="\n") as fh:
                fh.write(f"# gamma = {_format_value(params.gamma)}\n")
                fh.write(f"# omega0 = {_format_value(params.omega0)}\n")
                fh.write(f"# var_phi = {_format_value(params.var_phi)}\n")
                fh.write(f"# temperature = {_format_value(params.temperature)}\n")
                fh.write(f"# duration = {_format_value(duration)}\n")
                fh.write(f"# h = {_format_value(h)}\n")
                fh.write(f"# n_paths = {n_paths}\n")
                fh.write(f"# master_seed = {master_seed}\n")
                fh.write(f"# var_empirical = {_format_value(summary.var_empirical)}\n")
                fh.write(f"# var_std_error = {_format_value(summary.var_std_error)}\n")
                fh.write(f"# peak_analytic = {_format_value(summary.peak_analytic)}\n")
                fh.write(f"# peak_empirical = {_format_value(summary.peak_empirical)}\n")
                fh.write(f"# bin_width = {_format_value(summary.bin_width)}\n")
                fh.write("omega,S_empirical,S_analytic\n")
                for w, s_emp, s_ana in zip(omega_pos, density_pos, analytic):
                    fh.write(f"{_format_value(w)},{_format_value(s_emp)},{_format_value(s_ana)}\n")
        except OSError as err:
            raise OSError(f"cannot write CSV to '{path}': {err}") from err
    return summary


# Bundled parameter studies: three curves per preset, all with V0 = 0.75,
# F0 = 0.5 and a 120-point linear frequency grid on [0.05, 6].
PRESET_NAMES = ("fig1-top", "fig1-bottom", "fig3")

_PRESET_SYSTEM = SystemParams(v0=0.75, f0=0.5)
_PRESET_GRID = {"start": 0.05, "stop": 6.0, "count": 120}


def preset_sweeps(
    name: str,
    *,
    realizations: int = 100,
    master_seed: int = DEFAULT_SEED,
    tf: float = 100.0,
    dt: float = 1e-3,
    workers: int = 0,
) -> list[tuple[str, SweepSpec]]:
    """Return ``(label, spec)`` pairs for a named preset."""
    base = SweepSpec(
        system=_PRESET_SYSTEM,
        grid=TimeGrid(t_final=tf, dt=dt),
        mode=PhaseMode.HARMONIC_NOISE,
        var_phi=0.5,
        gamma=0.05,
        realizations=realizations,
        master_seed=master_seed,
        workers=workers,
        **_PRESET_GRID,
    )
    if name == "fig1-top":
        return [
            (f"var{v}", replace(base, var_phi=v)) for v in (0.1, 0.5, 2.0)
        ]
    if name == "fig1-bottom":
        return [
            (f"gamma{g}", replace(base, gamma=g)) for g in (0.0, 0.05, 2.5)
        ]
    if name == "fig3":
        return [
            ("harmonic", base),
            ("det-averaged", replace(base, mode=PhaseMode.DETERMINISTIC_AVERAGED, gamma=None)),
            ("det-fixed", replace(base, mode=PhaseMode.DETERMINISTIC_FIXED, gamma=None, phi0=0.0)),
        ]
    raise ValueError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
