"""Two-level avoided-crossing propagation with a phase-modulated coupling.

Model
-----
In the diabatic basis {(1,0)^T, (0,1)^T} the Hamiltonian is

    H(t) = [[-f0*t/2,              (v0/2)*(1 + e^{i phi(t)})],
            [(v0/2)*(1 + e^{-i phi(t)}),  f0*t/2           ]]

where ``phi(t)`` comes from a harmonic-noise path or a deterministic
sinusoid.  With the drive removed entirely (``phi = None``) the coupling is
the bare ``v0/2`` and the sweep reduces to the textbook two-level crossing
whose asymptotic transition probability is ``1 - exp(-pi*v0**2/(2*f0))``.

A trajectory starts in the diabatic ground state at ``t = -t_final``
(``(0,1)^T`` for ``f0 > 0``), is propagated with an exactly unitary
closed-form per-step exponential (midpoint time and midpoint phase,
second-order accurate), and reports the population of the opposite
diabatic state averaged over the last fraction of the window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import evolve_two_level
from .noise import DeterministicPhaseParams, NoisePath, deterministic_phase

__all__ = [
    "SystemParams",
    "TwoLevelState",
    "TimeGrid",
    "TrajectoryResult",
    "NormDriftError",
    "hamiltonian",
    "instantaneous_gap",
    "propagate_step",
    "run_trajectory",
    "tail_average",
]

NORM_DRIFT_LIMIT = 1e-9


class NormDriftError(RuntimeError):
    """A propagated state lost unit norm beyond the accepted drift."""


@dataclass(frozen=True)
class SystemParams:
    """Coupling strength ``v0`` and sweep rate ``f0`` (dimensionless).

    ``v0 = 0`` is allowed as the degenerate uncoupled system; ``f0`` must be
    strictly positive.
    """

    v0: float
    f0: float

    def __post_init__(self):
        if not self.v0 >= 0.0:
            raise ValueError(f"v0 must be >= 0, got {self.v0}")
        if not self.f0 > 0.0:
            raise ValueError(f"f0 must be > 0, got {self.f0}")


@dataclass(frozen=True)
class TwoLevelState:
    """Complex amplitudes in the diabatic basis; must be unit norm."""

    c0: complex
    c1: complex

    def __post_init__(self):
        if abs(self.norm_sq() - 1.0) > NORM_DRIFT_LIMIT:
            raise ValueError(f"state norm^2 = {self.norm_sq()!r} is not 1 within {NORM_DRIFT_LIMIT}")

    def norm_sq(self) -> float:
        return abs(self.c0) ** 2 + abs(self.c1) ** 2

    def populations(self) -> tuple[float, float]:
        return abs(self.c0) ** 2, abs(self.c1) ** 2


#: Diabatic ground state at the left edge of the window for f0 > 0.
DIABATIC_GROUND = TwoLevelState(0.0 + 0.0j, 1.0 + 0.0j)


@dataclass(frozen=True)
class TimeGrid:
    """Symmetric window [-t_final, t_final] with propagation step dt."""

    t_final: float
    dt: float

    def __post_init__(self):
        if not self.t_final > 0.0:
            raise ValueError(f"t_final must be > 0, got {self.t_final}")
        if not self.dt > 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        ratio = 2.0 * self.t_final / self.dt
        if abs(ratio - round(ratio)) > 1e-6:
            raise ValueError(f"window 2*{self.t_final} is not an integer number of steps of {self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(2.0 * self.t_final / self.dt))

    @property
    def t_start(self) -> float:
        return -self.t_final


@dataclass(frozen=True)
class TrajectoryResult:
    """Outcome of one propagation.

    ``sampled_p`` holds the transition probability sampled every
    ``sample_every`` steps over the whole window; ``p_series`` is its tail
    portion that enters the average.
    """

    p_transition: float
    norm_drift: float
    final_state: TwoLevelState
    sampled_times: np.ndarray
    sampled_p: np.ndarray
    tail_count: int

    @property
    def p_series(self) -> np.ndarray:
        return self.sampled_p[len(self.sampled_p) - self.tail_count:]


def hamiltonian(system: SystemParams, t: float, phi: float | None) -> np.ndarray:
    """2x2 Hermitian Hamiltonian at time ``t`` and phase ``phi``.

    ``phi = None`` selects the undriven reference with static coupling
    ``v0/2`` (no phase term at all); note this differs from ``phi = 0``,
    where the two coupling terms add up to ``v0``.
    """
    if phi is None:
        coupling = 0.5 * system.v0 + 0.0j
    else:
        coupling = 0.5 * system.v0 * (1.0 + np.exp(1j * phi))
    e = 0.5 * system.f0 * t
    return np.array([[-e, coupling], [np.conj(coupling), e]])


def instantaneous_gap(system: SystemParams, t: float, phi: float | None) -> float:
    """Eigenvalue splitting of :func:`hamiltonian` in closed form."""
    if phi is None:
        coupling_sq = 0.25 * system.v0**2
    else:
        coupling_sq = 0.25 * system.v0**2 * 2.0 * (1.0 + math.cos(phi))
    return 2.0 * math.sqrt((0.5 * system.f0 * t) ** 2 + coupling_sq)


def propagate_step(state: TwoLevelState, h_matrix: np.ndarray, dt: float) -> TwoLevelState:
    """Apply the closed-form unitary ``exp(-i*dt*H)`` to the state.

    Uses the Pauli decomposition ``H = c*I + a . sigma``; exactly unitary up
    to rounding, with a series branch for the ``|a| -> 0`` limit.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    h = np.asarray(h_matrix)
    c = 0.5 * (h[0, 0].real + h[1, 1].real)
    a_z = 0.5 * (h[0, 0].real - h[1, 1].real)
    a_x = h[0, 1].real
    a_y = -h[0, 1].imag
    a = math.sqrt(a_x * a_x + a_y * a_y + a_z * a_z)
    theta = a * dt
    if theta > 1e-6:
        f = math.sin(theta) / a
    else:
        f = dt * (1.0 - theta * theta / 6.0)
    cth = math.cos(theta)
    phase = complex(math.cos(c * dt), -math.sin(c * dt))
    u00 = phase * (cth - 1j * f * a_z)
    u01 = phase * (-f * a_y - 1j * f * a_x)
    u10 = phase * (f * a_y - 1j * f * a_x)
    u11 = phase * (cth + 1j * f * a_z)
    return TwoLevelState(u00 * state.c0 + u01 * state.c1, u10 * state.c0 + u11 * state.c1)


def tail_average(series, fraction: float) -> float:
    """Mean of the last ``ceil(fraction * len)`` samples."""
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        raise ValueError("cannot average an empty series")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    count = math.ceil(fraction * values.size)
    return float(np.mean(values[values.size - count:]))


def _midpoint_phases(path: NoisePath, grid: TimeGrid) -> np.ndarray:
    """Extract phase values at every step midpoint from a half-step path."""
    n = grid.n_steps
    if not math.isclose(path.h, 0.5 * grid.dt, rel_tol=1e-9, abs_tol=0.0):
        raise ValueError(f"phase path step {path.h} is not dt/2 = {0.5 * grid.dt}")
    if abs(path.t0 - grid.t_start) > 1e-9 * max(1.0, grid.t_final):
        raise ValueError(f"phase path starts at {path.t0}, expected {grid.t_start}")
    if len(path) < 2 * n + 1:
        raise ValueError(f"phase path has {len(path)} points, needs {2 * n + 1} to span the window")
    return np.ascontiguousarray(path.phi[1:2 * n:2])


def run_trajectory(
    system: SystemParams,
    grid: TimeGrid,
    phase_source: NoisePath | DeterministicPhaseParams | None = None,
    *,
    tail_fraction: float = 0.1,
    sample_every: int = 100,
) -> TrajectoryResult:
    """Propagate one trajectory across the window and tail-average P(t).

    ``phase_source`` selects the drive: a :class:`NoisePath` on the half-step
    grid, a :class:`DeterministicPhaseParams` sinusoid, or ``None`` for the
    undriven closed-form reference.
    """
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError(f"tail_fraction must be in (0, 1], got {tail_fraction}")
    if sample_every < 1:
        raise ValueError(f"sample_every must be >= 1, got {sample_every}")
    n = grid.n_steps
    sample_every = min(sample_every, n)
    if isinstance(phase_source, NoisePath):
        phi_mid = _midpoint_phases(phase_source, grid)
        driven = True
    elif isinstance(phase_source, DeterministicPhaseParams):
        t_mid = grid.t_start + (np.arange(n) + 0.5) * grid.dt
        phi_mid = np.ascontiguousarray(deterministic_phase(phase_source, t_mid))
        driven = True
    elif phase_source is None:
        phi_mid = np.empty(0)
        driven = False
    else:
        raise TypeError(f"unsupported phase source {type(phase_source).__name__}")
    p_samples, drift, c0, c1 = evolve_two_level(
        system.v0, system.f0, grid.t_start, grid.dt, n, phi_mid, driven, sample_every,
    )
    times = grid.t_start + grid.dt * sample_every * (1.0 + np.arange(p_samples.size))
    tail_count = math.ceil(tail_fraction * p_samples.size)
    return TrajectoryResult(
        p_transition=tail_average(p_samples, tail_fraction),
        norm_drift=float(drift),
        final_state=TwoLevelState(complex(c0), complex(c1)),
        sampled_times=times,
        sampled_p=p_samples,
        tail_count=tail_count,
    )
