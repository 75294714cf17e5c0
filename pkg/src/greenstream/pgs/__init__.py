"""Predictive green streaming: the joint airtime / quality MILP and its solvers."""
from .model import MilpModel, PgsInstance, build_model
from .mps import export_mps
from .oracle import enumerate_oracle
from .solver import (PgsSolution, Relaxation, heuristic_round, solve_exact,
                     solve_fixed_levels, solve_lp_relaxation)

__all__ = [
    "MilpModel", "PgsInstance", "PgsSolution", "Relaxation", "build_model",
    "enumerate_oracle", "export_mps", "heuristic_round", "solve_exact",
    "solve_fixed_levels", "solve_lp_relaxation",
]
