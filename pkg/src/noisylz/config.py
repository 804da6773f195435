"""Strict parsing of the JSON run configurations.

Unknown keys are fatal: a silently ignored typo in a physics parameter is
the costliest failure mode of a batch sweep.  Every error names the
offending key path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import SystemParams, TimeGrid
from .ensemble import PhaseMode

__all__ = [
    "ConfigError",
    "SweepSpec",
    "SingleRunSpec",
    "NoiseValidationSpec",
    "parse_config",
    "parse_single_config",
    "parse_noise_validation_config",
]

DEFAULT_TF = 100.0
DEFAULT_DT = 1e-3
DEFAULT_REALIZATIONS = 100
DEFAULT_TAIL_FRACTION = 0.1
DEFAULT_SEED = 123456789
DEFAULT_SAMPLE_EVERY = 100
#: Harmonic-noise sweeps must start at or above this frequency; the
#: stationary variance diverges as omega0 -> 0.
MIN_NOISE_SWEEP_START = 0.01

_SWEEP_MODES = (
    PhaseMode.HARMONIC_NOISE,
    PhaseMode.DETERMINISTIC_AVERAGED,
    PhaseMode.DETERMINISTIC_FIXED,
)


class ConfigError(ValueError):
    """Invalid or malformed run configuration."""


def _as_mapping(obj, path: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"'{path}' must be an object, got {type(obj).__name__}")
    return obj

def _check_keys(obj: dict, path: str, allowed: dict[str, bool]) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        names = ", ".join(f"'{_join(path, k)}'" for k in unknown)
        raise ConfigError(f"unknown config key(s) {names}; allowed under '{path or 'top level'}': "
                          + ", ".join(sorted(allowed)))
    missing = sorted(k for k, required in allowed.items() if required and k not in obj)
    if missing:
        names = ", ".join(f"'{_join(path, k)}'" for k in missing)
        raise ConfigError(f"missing required config key(s) {names}")


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _number(obj: dict, path: str, key: str, default=None) -> float:
    if key not in obj:
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{_join(path, key)}' must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"'{_join(path, key)}' must be finite, got {value!r}")
    return float(value)


def _integer(obj: dict, path: str, key: str, default=None) -> int:
    if key not in obj:
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{_join(path, key)}' must be an integer, got {value!r}")
    return value


def _string(obj: dict, path: str, key: str, default=None) -> str | None:
    if key not in obj:
        return default
    value = obj[key]
    if not isinstance(value, str):
        raise ConfigError(f"'{_join(path, key)}' must be a string, got {value!r}")
    return value


def _positive(value: float, path: str) -> float:
    if value is None or not value > 0.0:
        raise ConfigError(f"'{path}' must be > 0, got {value}")
    return value


def _load(source) -> dict:
    if isinstance(source, dict):
        return source
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from None
    return _as_mapping(doc, "top level")


def _parse_mode(obj: dict, default: PhaseMode, allowed: tuple[PhaseMode, ...]) -> PhaseMode:
    raw = _string(obj, "", "mode", default.value)
    try:
        mode = PhaseMode(raw)
    except ValueError:
        raise ConfigError(f"'mode' must be one of {[m.value for m in allowed]}, got {raw!r}") from None
    if mode not in allowed:
        raise ConfigError(f"'mode' must be one of {[m.value for m in allowed]}, got {raw!r}")
    return mode


def _parse_phase_block(obj: dict, mode: PhaseMode, *, with_omega0: bool) -> dict:
    """Validate the 'noise' block against the selected phase mode."""
    if mode is PhaseMode.ZERO:
        if "noise" in obj:
            raise ConfigError("'noise' block is not allowed in 'zero' mode")
        return {"gamma": None, "var_phi": None, "phi0": 0.0, "omega0": None}
    block = _as_mapping(obj.get("noise"), "noise") if "noise" in obj else None
    if block is None:
        raise ConfigError("missing required config key(s) 'noise'")
    keys = {"var_phi": True}
    if mode is PhaseMode.HARMONIC_NOISE:
        keys["gamma"] = True
    if mode is PhaseMode.DETERMINISTIC_FIXED:
        keys["phi0"] = False
    if with_omega0:
        keys["omega0"] = True
    _check_keys(block, "noise", keys)
    var_phi = _positive(_number(block, "noise", "var_phi"), "noise.var_phi")
    gamma = None
    if mode is PhaseMode.HARMONIC_NOISE:
        gamma = _number(block, "noise", "gamma")
        if gamma is None or gamma < 0.0:
            raise ConfigError(f"'noise.gamma' must be >= 0, got {gamma}")
    phi0 = _number(block, "noise", "phi0", 0.0) if mode is PhaseMode.DETERMINISTIC_FIXED else 0.0
    omega0 = _positive(_number(block, "noise", "omega0"), "noise.omega0") if with_omega0 else None
    return {"gamma": gamma, "var_phi": var_phi, "phi0": phi0, "omega0": omega0}


def _parse_common(obj: dict, path: str) -> dict:
    v0 = _number(obj, path, "V0")
    if v0 is None or v0 < 0.0:
        raise ConfigError(f"'V0' must be >= 0, got {v0}")
    f0 = _positive(_number(obj, path, "F0"), "F0")
    tf = _positive(_number(obj, path, "tf", DEFAULT_TF), "tf")
    dt = _positive(_number(obj, path, "dt", DEFAULT_DT), "dt")
    tail = _number(obj, path, "tail_fraction", DEFAULT_TAIL_FRACTION)
    if not 0.0 < tail <= 1.0:
        raise ConfigError(f"'tail_fraction' must be in (0, 1], got {tail}")
    try:
        grid = TimeGrid(t_final=tf, dt=dt)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    return {
        "system": SystemParams(v0=v0, f0=f0),
        "grid": grid,
        "tail_fraction": tail,
        "seed": _integer(obj, path, "seed", DEFAULT_SEED),
        "out": _string(obj, path, "out"),
    }


@dataclass(frozen=True)
class SweepSpec:
    """Fully validated description of a frequency sweep."""

    system: SystemParams
    grid: TimeGrid
    mode: PhaseMode
    var_phi: float
    start: float
    stop: float
    count: int
    gamma: float | None = None
    phi0: float = 0.0
    realizations: int = DEFAULT_REALIZATIONS
    master_seed: int = DEFAULT_SEED
    tail_fraction: float = DEFAULT_TAIL_FRACTION
    workers: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.count < 2:
            raise ConfigError(f"'sweep.count' must be >= 2, got {self.count}")
        if not self.start < self.stop:
            raise ConfigError(f"'sweep.start' must be < 'sweep.stop', got [{self.start}, {self.stop}]")
        if not self.start > 0.0:
            raise ConfigError(f"'sweep.start' must be > 0, got {self.start}")
        if self.mode is PhaseMode.HARMONIC_NOISE:
            if self.gamma is None:
                raise ConfigError("'noise.gamma' is required for harmonic-noise sweeps")
            if self.start < MIN_NOISE_SWEEP_START:
                raise ConfigError(
                    f"'sweep.start' must be >= {MIN_NOISE_SWEEP_START} for harmonic-noise sweeps"
                )
        if self.realizations < 1:
            raise ConfigError(f"'realizations' must be >= 1, got {self.realizations}")
        if self.workers < 0:
            raise ConfigError(f"'threads' must be >= 0, got {self.workers}")

    @property
    def omega0_values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class SingleRunSpec:
    """One trajectory in any phase mode; emits the sampled P(t) series."""

    system: SystemParams
    grid: TimeGrid
    mode: PhaseMode
    var_phi: float | None
    omega0: float | None
    gamma: float | None = None
    phi0: float = 0.0
    master_seed: int = DEFAULT_SEED
    tail_fraction: float = DEFAULT_TAIL_FRACTION
    sample_every: int = DEFAULT_SAMPLE_EVERY
    out: str | None = None


@dataclass(frozen=True)
class NoiseValidationSpec:
    """Spectrum/variance validation run for one noise parameter set."""

    gamma: float
    omega0: float
    var_phi: float
    duration: float = 400.0
    h: float = 0.05
    n_paths: int = 200
    master_seed: int = DEFAULT_SEED
    out: str | None = None

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ConfigError(f"'noise.gamma' must be > 0 for spectrum validation, got {self.gamma}")
        if not self.duration > 0.0:
            raise ConfigError(f"'duration' must be > 0, got {self.duration}")
        if not self.h > 0.0:
            raise ConfigError(f"'h' must be > 0, got {self.h}")
        if self.n_paths < 1:
            raise ConfigError(f"'n_paths' must be >= 1, got {self.n_paths}")


def parse_config(source) -> SweepSpec:
    """Parse and validate a sweep configuration (JSON text or mapping)."""
    obj = _load(source)
    _check_keys(obj, "", {
        "V0": True, "F0": True, "noise": True, "sweep": True, "mode": False,
        "tf": False, "dt": False, "realizations": False, "seed": False,
        "tail_fraction": False, "threads": False, "out": False,
    })
    mode = _parse_mode(obj, PhaseMode.HARMONIC_NOISE, _SWEEP_MODES)
    common = _parse_common(obj, "")
    phase = _parse_phase_block(obj, mode, with_omega0=False)
    sweep = _as_mapping(obj["sweep"], "sweep")
    _check_keys(sweep, "sweep", {"start": True, "stop": True, "count": True})
    count = _integer(sweep, "sweep", "count")
    if count is None:
        raise ConfigError("'sweep.count' must be an integer")
    return SweepSpec(
        system=common["system"],
        grid=common["grid"],
        mode=mode,
        var_phi=phase["var_phi"],
        gamma=phase["gamma"],
        phi0=phase["phi0"],
        start=_number(sweep, "sweep", "start"),
        stop=_number(sweep, "sweep", "stop"),
        count=count,
        realizations=_integer(obj, "", "realizations", DEFAULT_REALIZATIONS),
        master_seed=common["seed"],
        tail_fraction=common["tail_fraction"],
        workers=_integer(obj, "", "threads", 0),
        out=common["out"],
    )


def parse_single_config(source) -> SingleRunSpec:
    """Parse and validate a single-trajectory configuration."""
    obj = _load(source)
    _check_keys(obj, "", {
        "V0": True, "F0": True, "mode": False, "noise": False,
        "tf": False, "dt": False, "seed": False, "tail_fraction": False,
        "sample_every": False, "out": False,
    })
    mode = _parse_mode(obj, PhaseMode.ZERO, tuple(PhaseMode))
    common = _parse_common(obj, "")
    phase = _parse_phase_block(obj, mode, with_omega0=True)
    sample_every = _integer(obj, "", "sample_every", DEFAULT_SAMPLE_EVERY)
    if sample_every < 1:
        raise ConfigError(f"'sample_every' must be >= 1, got {sample_every}")
    return SingleRunSpec(
        system=common["system"],
        grid=common["grid"],
        mode=mode,
        var_phi=phase["var_phi"],
        omega0=phase["omega0"],
        gamma=phase["gamma"],
        phi0=phase["phi0"],
        master_seed=common["seed"],
        tail_fraction=common["tail_fraction"],
        sample_every=sample_every,
        out=common["out"],
    )


def parse_noise_validation_config(source) -> NoiseValidationSpec:
    """Parse and validate a spectrum-validation configuration."""
    obj = _load(source)
    _check_keys(obj, "", {
        "noise": True, "duration": False, "h": False, "n_paths": False,
        "seed": False, "out": False,
    })
    block = _as_mapping(obj["noise"], "noise")
    _check_keys(block, "noise", {
        "gamma": True, "omega0": True, "var_phi": False, "temperature": False,
    })
    gamma = _number(block, "noise", "gamma")
    omega0 = _positive(_number(block, "noise", "omega0"), "noise.omega0")
    var_phi = _number(block, "noise", "var_phi")
    temperature = _number(block, "noise", "temperature")
    if (var_phi is None) == (temperature is None):
        raise ConfigError("exactly one of 'noise.var_phi' or 'noise.temperature' is required")
    if var_phi is None:
        var_phi = _positive(temperature, "noise.temperature") / omega0**2
    else:
        var_phi = _positive(var_phi, "noise.var_phi")
    return NoiseValidationSpec(
        gamma=gamma,
        omega0=omega0,
        var_phi=var_phi,
        duration=_number(obj, "", "duration", 400.0),
        h=_number(obj, "", "h", 0.05),
        n_paths=_integer(obj, "", "n_paths", 200),
        master_seed=_integer(obj, "", "seed", DEFAULT_SEED),
        out=_string(obj, "", "out"),
    )
