"""Robust distributed average consensus under impulsive channel noise.

Simulation of the nonlinear consensus recursion

    x_i(t+1) = x_i(t) - alpha(t) sum_{j in N_i} f(h(x_i(t)) - h(x_j(t)) - n_ij(t))

with a power-limiting transmit map ``h`` and a bounded receive map ``f``, plus
the closed-form asymptotic analysis (limit covariance, optimal gain, MSE bound,
Fisher-information limit) and a Monte Carlo harness that checks one against
the other.
"""

__version__ = "0.1.0"

from .analysis import (AnalyticReport, analyze, asymptotic_covariance, fisher_check,
                       mse_bound, optimal_gain, sigma_n_sq, stability_margin,
                       validated_optimal_gain)
from .engine import (RCSystem, SensingConfig, StepSchedule, TrialBatch, TrialTrajectory,
                     default_checkpoints, initial_state, mean_preservation_check, rc_step,
                     run_trial, run_trials)
from .ensemble import (EnsembleStats, ExperimentConfig, compare_empirical_analytic,
                       load_config, run_ensemble)
from .exceptions import (CapabilityError, ConfigError, ConsensusError, GraphGenerationError,
                         NumericError, ParameterError, StabilityError)
from .graphs import (Graph, Spectrum, build_named, build_random, is_connected,
                     lambda2_closed_form, spectrum)
from .maps import ReceiveMap, SmoothedMap, TransmitMap, db_to_power
from .noise import NoiseFunctionals, NoiseModel, functionals

__all__ = [
    "AnalyticReport", "CapabilityError", "ConfigError", "ConsensusError", "EnsembleStats",
    "ExperimentConfig", "Graph", "GraphGenerationError", "NoiseFunctionals", "NoiseModel",
    "NumericError", "ParameterError", "RCSystem", "ReceiveMap", "SensingConfig",
    "SmoothedMap", "Spectrum", "StabilityError", "StepSchedule", "TransmitMap",
    "TrialBatch", "TrialTrajectory", "analyze", "asymptotic_covariance", "build_named",
    "build_random", "compare_empirical_analytic", "db_to_power", "default_checkpoints",
    "fisher_check", "functionals", "initial_state", "is_connected", "lambda2_closed_form",
    "load_config", "mean_preservation_check", "mse_bound", "optimal_gain", "rc_step",
    "run_ensemble", "run_trial", "run_trials", "sigma_n_sq", "spectrum", "stability_margin",
    "validated_optimal_gain",
]
