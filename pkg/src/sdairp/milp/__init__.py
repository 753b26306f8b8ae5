"""Exact mixed-binary linear programming: dual simplex, branch-and-bound and
an enumeration oracle."""

from .bnb import BranchAndBound, solve_mip
from .lp import solve_lp
from .model import (BINARY, CONTINUOUS, INFEASIBLE, NODE_LIMIT, OPTIMAL,
                    TIME_LIMIT, UNBOUNDED, LinearModel, MipSolution, ModelError,
                    SolverConfig)
from .oracle import enumerate_oracle

__all__ = [
    "BINARY", "CONTINUOUS", "INFEASIBLE", "NODE_LIMIT", "OPTIMAL", "TIME_LIMIT",
    "UNBOUNDED", "BranchAndBound", "LinearModel", "MipSolution", "ModelError",
    "SolverConfig", "enumerate_oracle", "solve_lp", "solve_mip",
]
