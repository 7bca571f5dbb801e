"""Noise of micromaser light generated by correlated atom bunches.

Semiclassical drift/diffusion theory of the cavity intensity and phase
for pump states with inter-atomic correlations, with steady states,
Mandel parameter, zero-frequency photocurrent noise, a stochastic
trajectory sampler and an exact truncated-Fock-space cross-check.
"""

__version__ = "0.1.0"

from .atom_dynamics import RabiField, mu_nu, polarization, r_matrix, variance
from .fpe_engine import (
    CavityConfig,
    DriftDiffusion,
    IndefiniteDiffusionError,
    NoiseReport,
    NoSteadyStateError,
    SteadyState,
    closed_form_discrepancies,
    diffusion_quadrature,
    drift,
    noise_report,
    optimal_operating_point,
    q_ii_closed_clone,
    q_ii_closed_z,
    q_ii_z_exact,
    sde_sample,
    steady_state_clone,
    steady_state_z,
)
from .oracle import OracleConfig, OracleResult, build_interaction, injection_cycle
from .oracle import steady_state as oracle_steady_state
from .pump_states import (
    CLONE_MIXTURE,
    GHZ_CLASS,
    PRODUCT_UPPER,
    Z_STATE,
    AtomicMoments,
    PumpState,
    build_density,
    entropy,
    initial_moments,
    reduce,
)

__all__ = [
    "__version__",
    "AtomicMoments",
    "CavityConfig",
    "CLONE_MIXTURE",
    "DriftDiffusion",
    "GHZ_CLASS",
    "IndefiniteDiffusionError",
    "NoiseReport",
    "NoSteadyStateError",
    "OracleConfig",
    "OracleResult",
    "PRODUCT_UPPER",
    "PumpState",
    "RabiField",
    "SteadyState",
    "Z_STATE",
    "build_density",
    "build_interaction",
    "closed_form_discrepancies",
    "diffusion_quadrature",
    "drift",
    "entropy",
    "initial_moments",
    "injection_cycle",
    "mu_nu",
    "noise_report",
    "optimal_operating_point",
    "oracle_steady_state",
    "polarization",
    "q_ii_closed_clone",
    "q_ii_closed_z",
    "q_ii_z_exact",
    "r_matrix",
    "reduce",
    "sde_sample",
    "steady_state_clone",
    "steady_state_z",
    "variance",
]
