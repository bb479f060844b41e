"""Synchronization and quantum correlations in damped oscillator networks.

Gaussian dynamics of harmonically coupled oscillators whose normal modes
damp at mode-dependent rates.  Networks whose slowest mode decouples
from the bath entirely keep oscillating (and keep their quantum
correlations) while the rest thermalizes; the tools here build such
networks, evolve them, and measure both the classical synchronization
and the surviving quantum correlations.
"""

from .dynamics import (
    GaussianState,
    SteadyState,
    Trajectory,
    change_basis,
    evolve,
    evolve_node_reference,
    initial_state,
    steady_state,
    thermal_variances,
    validate_state,
)
from .errors import ConfigError, OscnetError, UnphysicalSpec
from .measures import (
    collective_sync,
    energy,
    gaussian_discord,
    log_negativity,
    mutual_information,
    pair_covariance,
    pair_measure_series,
    pairwise_average,
    purity,
    symplectic_spectrum,
    von_neumann_entropy,
    windowed_correlation,
)
from .network import (
    NetworkSpec,
    attach_pair,
    build_network,
    hamiltonian_matrix,
    load_network,
    random_network,
    save_network,
)
from .scenarios import (
    ScenarioConfig,
    load_config,
    run_simulate,
    run_spectrum,
    run_sweep,
    run_tune,
    save_config,
)
from .spectral import (
    BathConfig,
    ModeDecomposition,
    analyze,
    diagonalize,
    effective_couplings,
    frozen_mode_report,
    mode_rates,
)
from .tuning import (
    balance_pair_couplings,
    embedding_residuals,
    estimate_sync_times,
    find_sync_frequency,
    find_sync_parameter,
    kappa_sigma_scan,
    motif_frozen_residual,
    motif_hub_frequency,
    parameter_scan,
)

__version__ = "0.1.0"

__all__ = [
    "BathConfig",
    "ConfigError",
    "GaussianState",
    "ModeDecomposition",
    "NetworkSpec",
    "OscnetError",
    "ScenarioConfig",
    "SteadyState",
    "Trajectory",
    "UnphysicalSpec",
    "analyze",
    "attach_pair",
    "balance_pair_couplings",
    "build_network",
    "change_basis",
    "collective_sync",
    "diagonalize",
    "effective_couplings",
    "embedding_residuals",
    "energy",
    "estimate_sync_times",
    "evolve",
    "evolve_node_reference",
    "find_sync_frequency",
    "find_sync_parameter",
    "frozen_mode_report",
    "gaussian_discord",
    "hamiltonian_matrix",
    "initial_state",
    "kappa_sigma_scan",
    "load_config",
    "load_network",
    "log_negativity",
    "mode_rates",
    "motif_frozen_residual",
    "motif_hub_frequency",
    "mutual_information",
    "pair_covariance",
    "pair_measure_series",
    "pairwise_average",
    "parameter_scan",
    "purity",
    "random_network",
    "run_simulate",
    "run_spectrum",
    "run_sweep",
    "run_tune",
    "save_config",
    "save_network",
    "steady_state",
    "symplectic_spectrum",
    "thermal_variances",
    "validate_state",
    "von_neumann_entropy",
    "windowed_correlation",
]
