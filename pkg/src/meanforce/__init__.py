"""Stochastic block Lanczos estimators for the reduced thermal state and
the effective (mean force) Hamiltonian of a small spin system strongly
coupled to a spin bath."""

from .spins import HamiltonianOperator, SpinSystemSpec, Term, build, spin_matrices
from .lanczos import BlockTridiagonal, block_lanczos, ground_energy, quadrature_corner
from .sampling import (
    EstimatorError,
    MeanForceEstimator,
    NotPositiveDefiniteError,
    PartialTraceEstimate,
    ProductStateEstimate,
    SamplerConfig,
    UnderflowError,
    eigenvalues_via_transform,
    estimate_partial_trace,
    mean_force_hamiltonian,
    product_state_estimate,
    reduced_density,
    sample_bath_state,
)
from .oracle import (
    DenseReduced,
    HighTempLimit,
    LowTempLimit,
    SolvableChainResult,
    dense_hamiltonian,
    dense_partial_trace,
    dense_reduced,
    high_temp_limit,
    low_temp_limit,
    solvable_chain,
)
from .observables import (
    ThermoRecord,
    bare_thermal_state,
    energy_deviation,
    entropy_from_probabilities,
    free_energy,
    free_energy_from_log,
    von_neumann_entropy,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
