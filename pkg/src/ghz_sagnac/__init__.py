"""Simulation and estimation toolkit for a GHZ-input atomic Sagnac interferometer."""

__version__ = "0.1.0"

from .core import Constant, DriveProfile, PhysicalParams, Sampled, SpinBranch, coupling_amplitude, total_time
from .evolution import (
    BranchState,
    branch_state,
    coherent_overlap,
    displacement_alpha,
    dynamical_phase,
    fock_distribution,
    ground_fidelity,
)
from .metrology import (
    GhzModel,
    QfiResult,
    qcrb,
    qfi_brute_force,
    qfi_coherent_spin,
    qfi_exact,
    qfi_truncated_analytic,
    scaling_exponent,
)
from .parity import (
    ParityMoments,
    parity_brute_force,
    parity_expectation_exact,
    parity_moments_exact,
    parity_moments_truncated,
    rotation_precision,
    rotation_precision_coherent_spin,
    rotation_precision_ideal,
    rotation_precision_truncated,
)
