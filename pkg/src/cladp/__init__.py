"""Concurrent-learning approximate optimal regulation.

A control-affine plant with linearly parameterized drift is identified online
from a recorded history stack while an actor-critic pair learns the optimal
value function from Bellman errors evaluated at pre-sampled states.
"""

from .adp import (AdpGains, CriticActorState, SamplePointSet, bellman_error_hat,
                  policy, residual_decomposition, sample_box_points,
                  sample_rank_certificate)
from .analysis import (GainInputs, GainReport, check_gain_conditions, compute_varthetas,
                       gain_report_for, identifier_decay_certificate)
from .basis import ValueBasis, make_polynomial_basis
from .config import ConfigError, ExperimentConfig, parse_config, shipped_config
from .estimator import OptimalRegulator
from .identifier import (HistoryStack, IdentifierGains, StackEntry, rank_certificate,
                         stack_insert)
from .oracle import LqrOracle, ideal_weights, solve_care
from .plant import CostSpec, PlantModel, make_model
from .sim import Problem, SimConfig, TrajectoryLog, run_experiment

__version__ = "0.1.0"

__all__ = [
    "AdpGains", "ConfigError", "CostSpec", "CriticActorState", "ExperimentConfig",
    "GainInputs", "GainReport", "HistoryStack", "IdentifierGains", "LqrOracle",
    "OptimalRegulator", "PlantModel", "Problem", "SamplePointSet", "SimConfig",
    "StackEntry", "TrajectoryLog", "ValueBasis", "bellman_error_hat",
    "check_gain_conditions", "compute_varthetas", "gain_report_for",
    "identifier_decay_certificate", "ideal_weights", "make_model",
    "make_polynomial_basis", "parse_config", "policy", "rank_certificate",
    "residual_decomposition", "run_experiment", "sample_box_points",
    "sample_rank_certificate", "shipped_config", "solve_care", "stack_insert",
]
