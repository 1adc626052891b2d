"""Continuous-variable teleportation of optical polarisation states.

Linearized quadrature fluctuations are tracked exactly as linear forms over
independent noise sources, which makes every variance, covariance and
commutator of a protocol an exact finite sum.
"""

from .errors import DomainError, GainError, OptimizationError, ParameterError
from .fluct import FluctuationVector, SourceRegistry, covariance, symplectic_product, variance
from .metrics import (
    CLASSICAL_LIMITS,
    closed_form,
    conditional_variances,
    polarization_fidelity,
    reference_fidelity,
    transfer_coefficients,
    tv_point,
    tv_trajectory,
    unity_gain_locus,
)
from .optics import AMPLITUDE, PHASE, OpticalMode, beamsplitter, coherent, epr_pair, phase_shift, squeezed, vacuum
from .optimizer import OptimizationProblem, OptimizationResult, bet_regimes, fidelity_problem, maximize, sweep
from .protocols import SCHEMES, ProtocolParams, TeleportOutcome, simulate, teleport
from .stokes import PolarizationState, stokes_statistics, stokes_variances, uncertainty_check

__version__ = "0.1.0"

__all__ = [
    "AMPLITUDE",
    "CLASSICAL_LIMITS",
    "DomainError",
    "FluctuationVector",
    "GainError",
    "OpticalMode",
    "OptimizationError",
    "OptimizationProblem",
    "OptimizationResult",
    "PHASE",
    "ParameterError",
    "PolarizationState",
    "ProtocolParams",
    "SCHEMES",
    "SourceRegistry",
    "TeleportOutcome",
    "beamsplitter",
    "bet_regimes",
    "closed_form",
    "coherent",
    "conditional_variances",
    "covariance",
    "epr_pair",
    "fidelity_problem",
    "maximize",
    "phase_shift",
    "polarization_fidelity",
    "reference_fidelity",
    "simulate",
    "squeezed",
    "stokes_statistics",
    "stokes_variances",
    "sweep",
    "symplectic_product",
    "teleport",
    "transfer_coefficients",
    "tv_point",
    "tv_trajectory",
    "uncertainty_check",
    "unity_gain_locus",
    "vacuum",
    "variance",
]
