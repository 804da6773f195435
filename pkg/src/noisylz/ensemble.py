"""Ensembles of independent trajectories with reproducible seeding.

Every realization is fully determined by ``derive_seed(master_seed, index)``,
so results are bit-identical for any worker count; the reduction runs in
index order regardless of completion order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .dynamics import (
    NORM_DRIFT_LIMIT,
    NormDriftError,
    SystemParams,
    TimeGrid,
    run_trajectory,
)
from .noise import DeterministicPhaseParams, NoiseParams, generate_path

__all__ = [
    "PhaseMode",
    "EnsembleConfig",
    "TransitionStatistics",
    "derive_seed",
    "realization_source",
    "run_ensemble",
    "merge_statistics",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

#: Per-realization values are kept on the result up to this ensemble size.
PER_REALIZATION_LIMIT = 10_000


class PhaseMode(str, Enum):
    HARMONIC_NOISE = "harmonic-noise"
    DETERMINISTIC_AVERAGED = "deterministic-averaged"
    DETERMINISTIC_FIXED = "deterministic-fixed"
    ZERO = "zero"


#: Modes that run a single deterministic trajectory (n forced to 1).
_SINGLE_SHOT_MODES = (PhaseMode.DETERMINISTIC_FIXED, PhaseMode.ZERO)


def derive_seed(master: int, index: int) -> int:
    """Avalanche-mix ``(master, index)`` into an independent stream seed.

    splitmix64 applied to ``master + (index+1)*golden``; bijective in either
    argument with the other fixed, so distinct indices (or masters) can
    never collide.
    """
    if index < 0:
        raise ValueError(f"index must be >= 0, got {index}")
    z = (master + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class EnsembleConfig:
    n_realizations: int
    master_seed: int
    phase_mode: PhaseMode

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ValueError(f"n_realizations must be >= 1, got {self.n_realizations}")
        object.__setattr__(self, "phase_mode", PhaseMode(self.phase_mode))


@dataclass(frozen=True)
class TransitionStatistics:
    """Mean transition probability with its standard error.

    ``std_error = sample_std / sqrt(n)`` (0 for n = 1).  ``per_realization``
    and ``indices`` are kept for diagnostics up to
    ``PER_REALIZATION_LIMIT`` realizations.
    """

    mean: float
    std_error: float
    n: int
    per_realization: np.ndarray | None = None
    indices: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0.0 <= self.mean <= 1.0:
            raise ValueError(f"mean must be in [0, 1], got {self.mean}")
        if not self.std_error >= 0.0:
            raise ValueError(f"std_error must be >= 0, got {self.std_error}")

    @classmethod
    def from_values(cls, values: np.ndarray, indices: np.ndarray | None = None) -> "TransitionStatistics":
        values = np.asarray(values, dtype=float)
        n = values.size
        if n < 1:
            raise ValueError("need at least one realization")
        mean = float(np.mean(values))
        std_error = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        keep = n <= PER_REALIZATION_LIMIT
        if indices is None:
            indices = np.arange(n)
        return cls(
            mean=mean,
            std_error=std_error,
            n=n,
            per_realization=values if keep else None,
            indices=np.asarray(indices) if keep else None,
        )


def realization_source(mode: PhaseMode, phase, grid: TimeGrid, master_seed: int, index: int):
    """Phase source seen by realization ``index`` of an ensemble.

    Harmonic-noise mode generates the half-step noise path; the averaged
    deterministic mode draws its phase offset uniformly from the derived
    stream.  Fixed and zero modes are independent of the seed.
    """
    seed = derive_seed(master_seed, index)
    if mode is PhaseMode.HARMONIC_NOISE:
        return generate_path(phase, grid.t_start, grid.t_final, 0.5 * grid.dt, seed)
    if mode is PhaseMode.DETERMINISTIC_AVERAGED:
        phi0 = np.random.default_rng(seed).uniform(0.0, 2.0 * math.pi)
        return replace(phase, phi0=phi0)
    if mode is PhaseMode.DETERMINISTIC_FIXED:
        return phase
    return None


def _realization(args):
    """Run one realization; top-level so it pickles into worker processes."""
    system, grid, phase, mode, master_seed, index, tail_fraction = args
    source = realization_source(mode, phase, grid, master_seed, index)
    result = run_trajectory(system, grid, source, tail_fraction=tail_fraction)
    return index, result.p_transition, result.norm_drift


def _check_phase_source(mode: PhaseMode, phase) -> None:
    if mode is PhaseMode.HARMONIC_NOISE and not isinstance(phase, NoiseParams):
        raise TypeError(f"mode {mode.value!r} needs NoiseParams, got {type(phase).__name__}")
    if mode in (PhaseMode.DETERMINISTIC_AVERAGED, PhaseMode.DETERMINISTIC_FIXED) and not isinstance(
        phase, DeterministicPhaseParams
    ):
        raise TypeError(f"mode {mode.value!r} needs DeterministicPhaseParams, got {type(phase).__name__}")
    if mode is PhaseMode.ZERO and phase is not None:
        raise TypeError(f"mode 'zero' takes no phase parameters, got {type(phase).__name__}")


def _warm_kernels(system: SystemParams) -> None:
    """Trigger numba compilation in the parent before forking workers."""
    grid = TimeGrid(t_final=0.5, dt=0.1)
    run_trajectory(system, grid, None)
    generate_path(NoiseParams(0.1, 1.0, 1.0), 0.0, 1.0, 0.5, 0)


def run_ensemble(
    system: SystemParams,
    grid: TimeGrid,
    phase: NoiseParams | DeterministicPhaseParams | None,
    config: EnsembleConfig,
    *,
    workers: int = 1,
    tail_fraction: float = 0.1,
) -> TransitionStatistics:
    """Average the transition probability over independent realizations.

    In harmonic-noise mode realization ``i`` propagates along its own noise
    path; in deterministic-averaged mode it draws ``phi0 ~ U[0, 2*pi)``.
    The fixed-phase and zero modes are deterministic, so ``n`` is forced
    to 1.  ``workers`` > 1 (or 0 for the CPU count) distributes
    realizations over processes; the outcome does not depend on ``workers``.
    """
    mode = config.phase_mode
    _check_phase_source(mode, phase)
    n = 1 if mode in _SINGLE_SHOT_MODES else config.n_realizations
    tasks = [(system, grid, phase, mode, config.master_seed, i, tail_fraction) for i in range(n)]
    if workers == 0:
        workers = os.cpu_count() or 1
    if workers > 1 and n > 1:
        _warm_kernels(system)
        with ProcessPoolExecutor(max_workers=min(workers, n)) as pool:
            chunk = max(1, n // (4 * workers))
            outcomes = list(pool.map(_realization, tasks, chunksize=chunk))
    else:
        outcomes = [_realization(t) for t in tasks]
    outcomes.sort(key=lambda item: item[0])
    values = np.array([p for _, p, _ in outcomes])
    for index, _, drift in outcomes:
        if drift >= NORM_DRIFT_LIMIT:
            raise NormDriftError(f"realization {index} lost unit norm (drift {drift:.3e})")
    return TransitionStatistics.from_values(values, indices=np.arange(n))


def merge_statistics(a: TransitionStatistics, b: TransitionStatistics) -> TransitionStatistics:
    """Pool two disjoint ensembles exactly (Chan/Welford combination).

    Matches statistics over the concatenated per-realization values to
    rounding.  Overlapping realization sets are rejected whenever both
    sides still carry their per-realization indices.
    """
    if a.n < 1 or b.n < 1:
        raise ValueError("cannot merge empty statistics")
    if a.indices is not None and b.indices is not None:
        if np.intersect1d(a.indices, b.indices).size:
            raise ValueError("overlapping realization sets")
    n = a.n + b.n
    delta = b.mean - a.mean
    mean = a.mean + delta * b.n / n
    m2_a = a.std_error**2 * a.n * (a.n - 1)
    m2_b = b.std_error**2 * b.n * (b.n - 1)
    m2 = m2_a + m2_b + delta * delta * a.n * b.n / n
    std_error = math.sqrt(m2 / (n - 1)) / math.sqrt(n) if n > 1 else 0.0
    both_kept = a.per_realization is not None and b.per_realization is not None
    keep = both_kept and n <= PER_REALIZATION_LIMIT
    return TransitionStatistics(
        mean=mean,
        std_error=std_error,
        n=n,
        per_realization=np.concatenate([a.per_realization, b.per_realization]) if keep else None,
        indices=np.concatenate([a.indices, b.indices]) if keep
        and a.indices is not None and b.indices is not None else None,
    )
