"""Simplex-spline value-function approximation with recursive TD learning,
applied to the stochastic pendulum swing-up."""

__version__ = "0.1.0"

from .continuity import (NullSpaceProjector, SmoothnessMatrix,
                         build_smoothness_matrix, null_space_projector)
from .control import PolicyParams, RewardParams, control_cost, greedy_action, reward
from .errors import (ConfigError, EstimatorDiverged, InvalidGrid, InvalidParam,
                     InvalidTriangulation, NumericalFailure, OutOfDomain,
                     SplineTDError)
from .estimator import Estimator
from .geometry import (Simplex, Triangulation, build_grid_triangulation,
                       load_triangulation)
from .harness import (ExperimentConfig, ExperimentResult, TrialRecord,
                      build_agent, compute_t_up, moving_average,
                      run_experiment_I, run_experiment_II, run_trial)
from .pendulum import PendulumParams, PendulumState, set_mass, step, total_energy
from .spline import (BasisRow, SplineFunction, SplineSpace, bernstein,
                     bnet_points, enumerate_multi_indices)

__all__ = [
    "__version__",
    "BasisRow", "ConfigError", "Estimator", "EstimatorDiverged",
    "ExperimentConfig", "ExperimentResult", "InvalidGrid", "InvalidParam",
    "InvalidTriangulation", "NullSpaceProjector", "NumericalFailure",
    "OutOfDomain", "PendulumParams", "PendulumState", "PolicyParams",
    "RewardParams", "Simplex", "SmoothnessMatrix", "SplineFunction",
    "SplineSpace", "SplineTDError", "TrialRecord", "Triangulation",
    "build_agent", "build_grid_triangulation", "build_smoothness_matrix",
    "bernstein", "bnet_points", "compute_t_up", "control_cost",
    "enumerate_multi_indices", "greedy_action", "load_triangulation",
    "moving_average", "null_space_projector", "reward", "run_experiment_I",
    "run_experiment_II", "run_trial", "set_mass", "step", "total_energy",
]
