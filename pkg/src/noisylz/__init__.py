"""Monte Carlo engine for two-level avoided-crossing sweeps whose coupling
carries a stochastic (harmonic-noise) or deterministic sinusoidal phase."""

from .analytics import GapEstimate, effective_band_gap, estimated_probability, lz_probability
from .config import (
    ConfigError,
    NoiseValidationSpec,
    SingleRunSpec,
    SweepSpec,
    parse_config,
    parse_noise_validation_config,
    parse_single_config,
)
from .dynamics import (
    DIABATIC_GROUND,
    NormDriftError,
    SystemParams,
    TimeGrid,
    TrajectoryResult,
    TwoLevelState,
    hamiltonian,
    instantaneous_gap,
    propagate_step,
    run_trajectory,
    tail_average,
)
from .ensemble import (
    EnsembleConfig,
    PhaseMode,
    TransitionStatistics,
    derive_seed,
    merge_statistics,
    run_ensemble,
)
from .noise import (
    DeterministicPhaseParams,
    NoiseParams,
    NoisePath,
    NoiseState,
    analytic_spectrum,
    deterministic_phase,
    empirical_spectrum,
    exact_step,
    generate_path,
    heun_step,
    sample_equilibrium,
    spectrum_peak,
    transition_matrices,
)
from .sweep import (
    NoiseValidationSummary,
    SweepRow,
    emit_csv,
    preset_sweeps,
    read_csv,
    run_sweep,
    saturation_value,
    validate_noise,
)

__version__ = "0.1.0"
