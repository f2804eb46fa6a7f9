"""Near-field multi-user MIMO hybrid beamforming toolkit.

Spherical-wave channel models for extremely large aperture arrays, a
WMMSE-style joint precoder / stream-selection solver, an exact two-layer
phase-shifter factorization, a penalized variant for discrete phase
alphabets, and a reproducible experiment harness with CSV output.
"""

from .channel import (
    SPEED_OF_LIGHT,
    ChannelMatrix,
    NearFieldRegionWarning,
    Placement,
    Scatterer,
    Scenario,
    UpaConfig,
    User,
    analytic_dof,
    antenna_positions,
    array_response,
    assemble_channel,
    edof,
    pairwise_distance,
    rayleigh_distance,
)
from .config import ConfigError, ExperimentConfig, dbm_to_watt, load_config, parse_config
from .metrics import (
    HybridBeamformer,
    PowerModel,
    StreamSelection,
    achievable_rate,
    hardware_power,
    interference_covariance,
    mse_matrix,
    network_objective,
    signal_covariances,
    transmit_power,
)
from .pli import DiscreteAlphabet, PliResult, discrete_project, penalty_schedule, pli_solve
from .wmmse_core import (
    GramEvd,
    WmmseState,
    interference_gram_evd,
    solve_hermitian,
    surrogate_value,
    update_combiner,
    update_weight,
)
from .wmmse_ts import (
    FactorizationResult,
    SolveResult,
    bisection_solve,
    hybrid_factorize,
    phase_split,
    select_streams,
    wmmse_ts_solve,
)

__version__ = "0.1.0"

__all__ = [
    "SPEED_OF_LIGHT",
    "ChannelMatrix",
    "ConfigError",
    "DiscreteAlphabet",
    "ExperimentConfig",
    "FactorizationResult",
    "GramEvd",
    "HybridBeamformer",
    "NearFieldRegionWarning",
    "Placement",
    "PliResult",
    "PowerModel",
    "Scatterer",
    "Scenario",
    "SolveResult",
    "StreamSelection",
    "UpaConfig",
    "User",
    "WmmseState",
    "achievable_rate",
    "analytic_dof",
    "antenna_positions",
    "array_response",
    "assemble_channel",
    "bisection_solve",
    "dbm_to_watt",
    "discrete_project",
    "edof",
    "hardware_power",
    "hybrid_factorize",
    "interference_covariance",
    "interference_gram_evd",
    "load_config",
    "mse_matrix",
    "network_objective",
    "parse_config",
    "pairwise_distance",
    "penalty_schedule",
    "phase_split",
    "pli_solve",
    "rayleigh_distance",
    "select_streams",
    "signal_covariances",
    "solve_hermitian",
    "surrogate_value",
    "transmit_power",
    "update_combiner",
    "update_weight",
    "wmmse_ts_solve",
]
