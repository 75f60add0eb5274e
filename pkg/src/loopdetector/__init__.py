"""Loop photon-counting detector: count statistics, simulation, reconstruction.

A weakly coupled APD samples a pulse trapped in a fiber loop once per
roundtrip; the package computes the exact click statistics of that setup,
extracts the conditional-probability response matrix w(k|n), simulates
measurements, and reconstructs photon-number distributions from measured
count histograms.
"""

from ._backend import BACKEND
from .confidence import CouplingScan, UndefinedEventError, confidence, optimize_coupling
from .config import ConfigError, InputSpec, RunConfig, load_config, parse_config
from .reconstruct import (
    ConditioningReport,
    ReconstructionResult,
    condition_diagnostics,
    estimate_errors,
    reconstruct_svd,
)
from .response import (
    CountDistribution,
    DetectorParams,
    PhotonNumberDistribution,
    ResponseMatrix,
    click_probability,
    count_distribution_coherent,
    count_distribution_mixture,
    detection_probabilities,
    effective_efficiency,
    forward_counts,
    generating_function,
    poisson_approximation,
    poisson_tail_mass,
    response_matrix,
    response_matrix_bruteforce,
)
from .series import BivariateSeries
from .simulate import (
    CountHistogram,
    chi_square_gof,
    simulate_coherent,
    simulate_distribution,
    simulate_fock,
    simulate_mixture,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BivariateSeries",
    "ConditioningReport",
    "ConfigError",
    "CountDistribution",
    "CountHistogram",
    "CouplingScan",
    "DetectorParams",
    "InputSpec",
    "PhotonNumberDistribution",
    "ReconstructionResult",
    "ResponseMatrix",
    "RunConfig",
    "UndefinedEventError",
    "chi_square_gof",
    "click_probability",
    "confidence",
    "condition_diagnostics",
    "count_distribution_coherent",
    "count_distribution_mixture",
    "detection_probabilities",
    "effective_efficiency",
    "estimate_errors",
    "forward_counts",
    "generating_function",
    "load_config",
    "optimize_coupling",
    "parse_config",
    "poisson_approximation",
    "poisson_tail_mass",
    "reconstruct_svd",
    "response_matrix",
    "response_matrix_bruteforce",
    "simulate_coherent",
    "simulate_distribution",
    "simulate_fock",
    "simulate_mixture",
]
