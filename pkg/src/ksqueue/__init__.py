"""Stretched-fractional M/M/1 queue: Kilbas-Saigo kernels, transient solvers and Monte Carlo."""

from .errors import (
    BranchError,
    KSQueueError,
    NumericError,
    ParameterError,
    PoleError,
    PrecisionLoss,
    SamplerGateError,
    StabilityError,
)
from .generator import QueueParams, TransientTable, build_generator, classical_transient_oracle, stationary_dist
from .mc import SamplerBackend, SimConfig, SimResult, run_simulation, sample_stable, sample_Z
from .solver import consistency_report, laplace_symbol_transient, transient
from .specfun import (
    Exponential,
    KilbasSaigo,
    KSParams,
    MittagLeffler,
    ks_coefficients,
    ks_eval,
    ks_moments,
    ml_eval,
)

__version__ = "0.1.0"

__all__ = [
    "BranchError", "KSQueueError", "NumericError", "ParameterError", "PoleError", "PrecisionLoss",
    "SamplerGateError", "StabilityError",
    "QueueParams", "TransientTable", "build_generator", "classical_transient_oracle", "stationary_dist",
    "SamplerBackend", "SimConfig", "SimResult", "run_simulation", "sample_stable", "sample_Z",
    "consistency_report", "laplace_symbol_transient", "transient",
    "Exponential", "KilbasSaigo", "KSParams", "MittagLeffler", "ks_coefficients", "ks_eval", "ks_moments", "ml_eval",
]
