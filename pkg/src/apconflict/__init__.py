"""Two-country all-pay conflict model: solvers, oracle checks, simulation."""

__version__ = "0.1.0"

from .equal import (BoundaryCoefficients, EquilibriumSolution, SolutionMethod,
                    boundary_coefficients, eval_equal_strategy, solve_equal)
from .errors import DivergenceError, ParameterError
from .general import (CConstants, SolverDiagnostics, c_constants,
                      eval_general_strategy, iterate_k0, k1_from_k0,
                      k2_from_k0)
from .model import (Bid, ConflictRatios, CountryParams, PayoffOutcome, Winner,
                    normalize_ratios, payoff)
from .oracle import (StrategyTable, best_response, build_strategy_table,
                     ode_residual, solve_k0_root, u1_payoff)
from .simulate import SimulationSummary, simulate

__all__ = [
    "Bid", "BoundaryCoefficients", "CConstants", "ConflictRatios",
    "CountryParams", "DivergenceError", "EquilibriumSolution",
    "ParameterError", "PayoffOutcome", "SimulationSummary",
    "SolutionMethod", "SolverDiagnostics", "StrategyTable", "Winner",
    "best_response", "boundary_coefficients", "build_strategy_table",
    "c_constants", "eval_equal_strategy", "eval_general_strategy",
    "iterate_k0", "k1_from_k0", "k2_from_k0", "normalize_ratios",
    "ode_residual", "payoff", "simulate", "solve_equal", "solve_k0_root",
    "u1_payoff",
]
