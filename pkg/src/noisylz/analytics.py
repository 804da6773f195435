"""Closed-form transition probability and the phase-averaged band gap.

The coupling magnitude at the crossing is ``v0*sqrt(2*(cos(phi)+1))``
= ``2*v0*|cos(phi/2)|``; averaging over the stationary Gaussian phase gives
an effective gap, and substituting its square into the closed-form sweep
formula yields an a-priori estimate of the transition probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dynamics import SystemParams

__all__ = [
    "GapEstimate",
    "lz_probability",
    "effective_band_gap",
    "estimated_probability",
]

DEFAULT_QUADRATURE_ORDER = 128

# Above this variance the Gaussian is wide enough that Gauss-Hermite nodes
# undersample the kinks of |cos(phi/2)|; switch to the exact cosine-series
# evaluation of the same expectation.
_SERIES_CROSSOVER = 0.25


@dataclass(frozen=True)
class GapEstimate:
    """Effective band gap and the transition probability it implies."""

    delta_e_eff: float
    p_est: float

    def __post_init__(self):
        if not self.delta_e_eff >= 0.0:
            raise ValueError(f"delta_e_eff must be >= 0, got {self.delta_e_eff}")
        if not 0.0 <= self.p_est <= 1.0:
            raise ValueError(f"p_est must be in [0, 1], got {self.p_est}")


def lz_probability(system: SystemParams) -> float:
    """Asymptotic transition probability 1 - exp(-pi*v0**2/(2*f0)).

    ``v0`` plays the role of the band gap at the crossing, i.e. this is the
    closed form for the undriven reference Hamiltonian whose coupling
    element is ``v0/2``.
    """
    return -math.expm1(-math.pi * system.v0**2 / (2.0 * system.f0))


@lru_cache(maxsize=8)
def _hermgauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.hermite.hermgauss(order)


def _mean_abs_cos_half_series(var_phi: float) -> float:
    """E|cos(phi/2)| for phi ~ N(0, var_phi) via the cosine series of |cos|.

    ``|cos u| = 2/pi + (4/pi) * sum_k (-1)^(k+1) cos(2ku) / (4k^2 - 1)`` and
    ``E cos(k*phi) = exp(-k^2*var/2)``; the tail is bounded by its first
    omitted term, so truncation is driven to ~1e-17.
    """
    total = 2.0 / math.pi
    sign = 1.0
    for k in range(1, 1000):
        term = math.exp(-0.5 * k * k * var_phi) / (4.0 * k * k - 1.0)
        total += sign * (4.0 / math.pi) * term
        sign = -sign
        if term < 1e-17:
            break
    return total


def effective_band_gap(v0: float, var_phi: float, order: int = DEFAULT_QUADRATURE_ORDER) -> float:
    """Average of the crossing gap over the stationary phase distribution.

    Computes ``v0 * E[2*|cos(phi/2)|]`` for ``phi ~ N(0, var_phi)``.  The
    absolute-value form makes the integrand's kinks at odd multiples of pi
    explicit.  Narrow distributions use Gauss-Hermite quadrature of the
    given ``order``; wide ones (var above ~0.25), whose kinks a fixed node
    set would undersample, use the exact series evaluation of the same
    expectation.  Both agree with a 1e7-sample Monte Carlo average well
    inside its standard error.
    """
    if not var_phi >= 0.0:
        raise ValueError(f"var_phi must be >= 0, got {var_phi}")
    if not v0 >= 0.0:
        raise ValueError(f"v0 must be >= 0, got {v0}")
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if var_phi == 0.0:
        return 2.0 * v0
    if var_phi > _SERIES_CROSSOVER:
        return v0 * 2.0 * _mean_abs_cos_half_series(var_phi)
    nodes, weights = _hermgauss(order)
    phi = math.sqrt(2.0 * var_phi) * nodes
    mean_abs_cos = float(weights @ np.abs(np.cos(0.5 * phi))) / math.sqrt(math.pi)
    return v0 * 2.0 * mean_abs_cos


def estimated_probability(
    system: SystemParams, var_phi: float, order: int = DEFAULT_QUADRATURE_ORDER
) -> GapEstimate:
    """Combine the effective gap with the closed-form sweep formula."""
    gap = effective_band_gap(system.v0, var_phi, order)
    if gap > 2.0 * system.v0 * (1.0 + 1e-12):
        raise ArithmeticError(f"quadrature produced gap {gap} above the 2*v0 bound")
    p_est = -math.expm1(-math.pi * gap**2 / (2.0 * system.f0))
    return GapEstimate(delta_e_eff=gap, p_est=p_est)
