"""Schedule optimization for feedback-controlled electromigration.

Pipeline: synthetic conductance traces -> per-cycle scores -> transition
matrix ``W`` -> one-hot QUBO -> classical or product-state VQE solvers ->
residual energy and S_max sweeps.
"""

from .classical import SaParams, SolverResult, brute_force, dp_exact, sa_solve
from .errors import (
    ConfigError,
    DimensionError,
    EmptyInputError,
    FceSchedError,
    InfeasibleError,
    ParseError,
    SizeError,
)
from .evaluation import SweepConfig, best_smax, residual_energy, sweep
from .qubo import QuboProblem, build_qubo, decode_schedule, energy, s_max
from .trace import (
    ConductanceTrace,
    GeneratorConfig,
    TransitionMatrix,
    build_transition_matrix,
    generate_synthetic_trace,
    planted_transition_matrix,
)
from .vqe import NoiseModel, VqeConfig, vqe_solve

__version__ = "0.1.0"

__all__ = [
    "ConductanceTrace",
    "ConfigError",
    "DimensionError",
    "EmptyInputError",
    "FceSchedError",
    "GeneratorConfig",
    "InfeasibleError",
    "NoiseModel",
    "ParseError",
    "QuboProblem",
    "SaParams",
    "SizeError",
    "SolverResult",
    "SweepConfig",
    "TransitionMatrix",
    "VqeConfig",
    "best_smax",
    "brute_force",
    "build_qubo",
    "build_transition_matrix",
    "decode_schedule",
    "dp_exact",
    "energy",
    "generate_synthetic_trace",
    "planted_transition_matrix",
    "residual_energy",
    "s_max",
    "sa_solve",
    "sweep",
    "vqe_solve",
]
