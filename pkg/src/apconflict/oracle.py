"""Independent numerical checks of candidate strategy pairs.

Nothing here trusts the solver's derivation: the payoff integral is
maximized directly, the first-order differential equations are checked by
finite differences on a sampled table, and the zero-cutoff endpoint
condition is solved by bracketing bisection.  Together these are the
trust anchor for both solvers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator

from .equal import (BoundaryCoefficients, EquilibriumSolution, SolutionMethod,
                    boundary_coefficients, eval_equal_strategy)
from .errors import DivergenceError, ParameterError
from .general import eval_general_strategy
from .model import ConflictRatios
from .numerics import adaptive_simpson, bisect_increasing, golden_section_max

DEFAULT_GRID_SIZE = 1024
MIN_ODE_GRID = 512
SEGMENT_QUAD_TOL = 1e-12  # per-segment budget; summed quadrature error stays under 1e-9
K0_BRACKET_MAX = 1e6


@dataclass
class StrategyTable:
    """Sampled view (r, f1, f2, feasibility flags) of a strategy pair.

    The grid must be strictly increasing and stay within
    [params.epsilon, 1].  feasible_i flags f_i(r) <= r; negative bids are
    tracked separately by the simulator.
    """

    r: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    feasible1: np.ndarray
    feasible2: np.ndarray
    params: ConflictRatios
    solution: EquilibriumSolution = field(repr=False)

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.f1 = np.asarray(self.f1, dtype=float)
        self.f2 = np.asarray(self.f2, dtype=float)
        self.feasible1 = np.asarray(self.feasible1, dtype=bool)
        self.feasible2 = np.asarray(self.feasible2, dtype=bool)
        if not (len(self.r) == len(self.f1) == len(self.f2)):
            raise ParameterError("table columns must have equal length")
        if len(self.r) < 2:
            raise ParameterError("table needs at least two grid points")
        if np.any(np.diff(self.r) <= 0):
            raise ParameterError("table grid must be strictly increasing in r")
        if self.r[0] < self.params.epsilon - 1e-15 or self.r[-1] > 1.0 + 1e-15:
            raise ParameterError("table grid must stay within [epsilon, 1]")

    def rows(self):
        for i in range(len(self.r)):
            yield (self.r[i], self.f1[i], self.f2[i],
                   bool(self.feasible1[i]), bool(self.feasible2[i]))

    @cached_property
    def _f2_curve(self) -> PchipInterpolator:
        # true bid curve, used in the payoff integrand
        self._check_f2_shape()
        return PchipInterpolator(self.r, self.f2)

    @cached_property
    def _f2_upper(self) -> PchipInterpolator:
        # Running maximum of f2, used only to invert bid levels.  The
        # general-case f2 can dip below zero near the cutoff (lam > beta),
        # but attainable levels lam*y are >= 0, so the win set
        # {r2 : f2(r2) < lam*y} is still the prefix interval ending at the
        # rightmost crossing, which is where the running maximum first
        # reaches the level.
        self._check_f2_shape()
        return PchipInterpolator(self.r, np.maximum.accumulate(self.f2))

    def _check_f2_shape(self) -> None:
        # Non-decreasing wherever positive; any dip must stay at or below
        # the floor (zero, up to the left-boundary residual scale).
        # Otherwise some nonnegative bid level has a disconnected win set
        # and the payoff integral split is invalid.
        f2 = self.f2
        floor = max(1e-9, 4.0 * abs(float(f2[0])))
        nonpos = np.nonzero(f2 <= 0.0)[0]
        j = int(nonpos[-1]) + 1 if len(nonpos) else 0
        if np.any(f2[:j] > floor) or np.any(np.diff(f2[j:]) < -1e-9):
            raise ParameterError("table f2 must be non-decreasing over its positive range")

    @cached_property
    def _win_integral_nodes(self) -> np.ndarray:
        # cumulative integral of (r2 - f2(r2)) at the grid nodes
        g = self._production_margin
        segments = [adaptive_simpson(g, self.r[i], self.r[i + 1], tol=SEGMENT_QUAD_TOL)
                    for i in range(len(self.r) - 1)]
        return np.concatenate(([0.0], np.cumsum(segments)))

    def _production_margin(self, x: float) -> float:
        return x - float(self._f2_curve(x))

    def f2_inverse(self, value: float) -> float:
        """Monotone bisection for the upper inverse of f2, clamped to the grid."""
        curve = self._f2_upper
        if value <= float(curve(self.r[0])):
            return float(self.r[0])
        if value >= float(curve(self.r[-1])):
            return float(self.r[-1])
        return bisect_increasing(lambda x: float(curve(x)) - value,
                                 float(self.r[0]), float(self.r[-1]))

    def win_integral(self, upper: float) -> float:
        """Integral of (r2 - f2(r2)) from the grid start up to ``upper``."""
        idx = int(np.searchsorted(self.r, upper, side="right")) - 1
        idx = min(max(idx, 0), len(self.r) - 2)
        partial = adaptive_simpson(self._production_margin, float(self.r[idx]),
                                   float(upper), tol=SEGMENT_QUAD_TOL)
        return float(self._win_integral_nodes[idx]) + partial


def build_strategy_table(params: ConflictRatios, solution: EquilibriumSolution,
                         grid_size: int = DEFAULT_GRID_SIZE) -> StrategyTable:
    """Sample a solution on a uniform grid over [epsilon, 1]."""
    if grid_size < 2:
        raise ParameterError("grid_size must be at least 2")
    r = np.linspace(params.epsilon, 1.0, grid_size)
    if solution.method is SolutionMethod.CLOSED_FORM_EQUAL:
        if not params.equal_case:
            raise ParameterError("closed-form equal solution requires lam == beta")
        f1, f2 = eval_equal_strategy(r, params.beta, params.alpha)
    else:
        f1, f2 = eval_general_strategy(r, solution, params.lam, params.beta,
                                       params.alpha, params.epsilon)
    return StrategyTable(r=r, f1=f1, f2=f2,
                         feasible1=f1 <= r, feasible2=f2 <= r,
                         params=params, solution=solution)


def u1_payoff(y: float, r1: float, table: StrategyTable) -> float:
    """Expected payoff to country 1 of bidding y against the tabled f2.

    The opponent draw r2 is uniform on the table's grid range; the win
    region is r2 < f2^(-1)(lam*y) (found by monotone bisection, clamped
    to the grid) and the integrals are evaluated by adaptive quadrature,
    split at that breakpoint.  Country 1's production rate is beta and
    country 2's is 1 in ratio units; the uniform density normalization is
    constant in y and omitted.
    """
    if y < 0:
        raise ParameterError("bid y must be nonnegative")
    lo = float(table.r[0])
    hi = float(table.r[-1])
    if not lo <= r1 <= hi:
        raise ParameterError(f"r1 must lie in [{lo}, {hi}]")
    p = table.params
    xstar = table.f2_inverse(p.lam * y)
    margin = p.beta * (r1 - y)
    win = margin * (xstar - lo) + (1.0 - p.alpha) * table.win_integral(xstar)
    lose = p.alpha * margin * (hi - xstar)
    return win + lose


def best_response(r1: float, table: StrategyTable,
                  coarse: int = 1024, refine_tol: float = 1e-6) -> float:
    """Argmax of u1_payoff over y in [0, 1].

    Coarse grid scan followed by golden-section refinement in the
    bracketing cell pair.
    """
    ys = np.linspace(0.0, 1.0, coarse)
    values = [u1_payoff(float(y), r1, table) for y in ys]
    i = int(np.argmax(values))
    a = float(ys[max(i - 1, 0)])
    b = float(ys[min(i + 1, coarse - 1)])
    return golden_section_max(lambda y: u1_payoff(y, r1, table), a, b,
                              tol=refine_tol)


def ode_residual(table: StrategyTable) -> tuple[float, float]:
    """Max residuals of the two first-order conditions over the table.

    Derivatives use centered differences on cell midpoints, with the
    strategy value at the midpoint taken as the two-point average; both
    approximations are second order, so halving the spacing cuts the
    residual about fourfold.  The residual of an exact solution is pure
    finite-difference error; a wrong table shows the equation mismatch.
    """
    if len(table.r) < MIN_ODE_GRID:
        raise ParameterError(f"ode_residual needs at least {MIN_ODE_GRID} grid points")
    p = table.params
    k0 = table.solution.k0
    lam, beta, alpha = p.lam, p.beta, p.alpha
    r, f1, f2 = table.r, table.f1, table.f2
    h = np.diff(r)
    mid = 0.5 * (r[:-1] + r[1:])
    d1 = np.diff(f1) / h
    d2 = np.diff(f2) / h
    f1m = 0.5 * (f1[:-1] + f1[1:])
    f2m = 0.5 * (f2[:-1] + f2[1:])
    u = (1.0 - alpha) * mid + alpha
    rhs1 = (k0 * u ** (beta / lam - 1.0)
            - alpha / u
            - (1.0 - alpha) * (beta + lam) * f1m / u
            + (1.0 - alpha) * beta * mid / u)
    rhs2 = (lam * beta * k0 ** (-lam / beta) * u ** (lam / beta - 1.0)
            - lam * beta * alpha / u
            - (1.0 - alpha) * (beta + lam) * f2m / u
            + (1.0 - alpha) * lam * mid / u)
    res1 = float(np.max(np.abs(lam * d1 - rhs1)))
    res2 = float(np.max(np.abs(beta * d2 - rhs2)))
    return res1, res2


def endpoint_gap(k0: float, coeffs: BoundaryCoefficients, lam: float, beta: float) -> float:
    """Signed residual of the zero-cutoff endpoint condition at k0."""
    return coeffs.a * k0 + coeffs.b * k0 ** (-lam / beta) - coeffs.c


def solve_k0_root(lam: float, beta: float, alpha: float) -> float:
    """Unique positive root of the zero-cutoff endpoint condition.

    g(K0) = a*K0 + b*K0^(-lam/beta) - c is strictly increasing on
    (0, inf) because a > 0 and b <= 0, so an expanding bracket plus
    bisection pins the root; the bracket search gives up beyond 1e6.
    """
    coeffs = boundary_coefficients(lam, beta, alpha)

    def g(k: float) -> float:
        return endpoint_gap(k, coeffs, lam, beta)

    lo = hi = 1.0
    while g(lo) > 0.0:
        lo *= 0.5
        if lo < 1e-12:
            raise DivergenceError("no lower bracket for the endpoint condition")
    while g(hi) < 0.0:
        hi *= 2.0
        if hi > K0_BRACKET_MAX:
            raise DivergenceError(
                f"no sign change of the endpoint condition below {K0_BRACKET_MAX}")
    if lo == hi:
        return lo
    # 100 halvings from a bracket of width <= 1e6 leave ~1e-24 relative width
    return bisect_increasing(g, lo, hi, iterations=100)
