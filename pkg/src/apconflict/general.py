"""Cutoff-regularized quasi-equilibria for the general case lam != beta.

The private resource variable is restricted to [epsilon, 1].  Zeroing the
strategies at epsilon (to first order in epsilon) determines K1 and K2 in
terms of K0, and the remaining endpoint condition f1(1) = f2(1)/lam
becomes a one-dimensional fixed-point problem

    K0 = (C3 - C1 * K0^(-lam/beta)) / C2

whose constants C1 < 0 < C2 reduce to the zero-cutoff endpoint
coefficients (b, a, c)/lam as epsilon -> 0.  Because C2 > 0 and C1 < 0
the underlying equation C2*K0 + C1*K0^(-lam/beta) = C3 is strictly
monotone in K0 and has a unique positive solution.

The bare update map is repelling at that solution whenever
(lam/beta)*|C1|/C2 exceeds 1 there, which is the typical situation for
lam > beta: successive substitution overshoots and settles into a
two-cycle instead of converging.  The run-to-convergence mode therefore
applies an adaptive relaxation factor to the same map; the finite-order
modes return the bare zeroth/first/second substitutions unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .equal import EquilibriumSolution, SolutionMethod
from .errors import DivergenceError, ParameterError
from .model import EPSILON_MAX

# Interior band for alpha: the constants carry alpha powers in
# denominators and degenerate at both endpoints.
ALPHA_MIN = 1e-6
ALPHA_MAX = 1.0 - 1e-6

ITERATE_MODES = ("order0", "order1", "order2", "converge")


@dataclass(frozen=True)
class CConstants:
    c1: float
    c2: float
    c3: float


@dataclass(frozen=True)
class SolverDiagnostics:
    """Iteration trace plus the residuals of all three boundary conditions.

    k0_trace starts at the zeroth approximation 1.  residual_bc_left1 and
    residual_bc_left2 are |f1(epsilon)| and |f2(epsilon)|,
    residual_bc_right is |f1(1) - f2(1)/lam|, and fixed_point_residual is
    |C2*K0 + C1*K0^(-lam/beta) - C3| for the returned K0.
    """

    k0_trace: tuple[float, ...]
    residual_bc_left1: float
    residual_bc_left2: float
    residual_bc_right: float
    fixed_point_residual: float
    converged: bool
    omega_trace: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if not self.k0_trace or self.k0_trace[0] != 1.0:
            raise ParameterError("k0_trace must be nonempty and start at 1")


def _validate(lam: float, beta: float, alpha: float, epsilon: float) -> None:
    if lam <= 0 or beta <= 0:
        raise ParameterError("lam and beta must be positive")
    if beta > lam:
        raise ParameterError("beta <= lam required; relabel countries first")
    if not (isinstance(alpha, (int, float)) and math.isfinite(alpha)):
        raise ParameterError(f"alpha must be a finite number, got {alpha!r}")
    if not ALPHA_MIN <= alpha <= ALPHA_MAX:
        raise ParameterError(
            f"alpha must lie in [{ALPHA_MIN}, {ALPHA_MAX}] for the general "
            f"solver (got {alpha}); use the equal-case solver at alpha -> 0"
        )
    if not (isinstance(epsilon, (int, float)) and math.isfinite(epsilon)):
        raise ParameterError(f"epsilon must be a finite number, got {epsilon!r}")
    if epsilon < 0 or epsilon >= EPSILON_MAX:
        raise ParameterError(f"epsilon must lie in [0, {EPSILON_MAX}), got {epsilon}")
    if epsilon == 0.0 and lam != beta:
        raise ParameterError("epsilon > 0 is required when lam != beta")


def _pieces(lam: float, beta: float, alpha: float, epsilon: float):
    """Shared building blocks of the constants.

    Powers of alpha are combined analytically so that no intermediate
    alpha^(-(1+lam/beta)) is formed.  Q1/Q2 vanish when epsilon is
    comparable to alpha/(1 + lam/beta); keep epsilon well below alpha.
    """
    rbl = beta / lam
    rlb = lam / beta
    one_m = 1.0 - alpha
    b1 = beta / (beta + 2.0 * lam)
    d1 = -alpha * (beta * lam + beta + 2.0 * lam) / ((beta + lam) * (beta + 2.0 * lam) * one_m)
    b2l = 1.0 / (2.0 * beta + lam)
    d2l = -alpha * beta * (1.0 + 2.0 * beta + lam) / ((beta + lam) * (2.0 * beta + lam) * one_m)
    q1 = (1.0 + rbl) * one_m * epsilon - alpha
    q2 = (1.0 + rlb) * one_m * epsilon - alpha
    return rbl, rlb, one_m, b1, d1, b2l, d2l, q1, q2


def c_constants(lam: float, beta: float, alpha: float, epsilon: float) -> CConstants:
    """Constants of the fixed-point condition for K0.

    As epsilon -> 0 they reduce to the zero-cutoff endpoint coefficients:
    c1 -> b/lam, c2 -> a/lam, c3 -> c/lam.
    """
    _validate(lam, beta, alpha, epsilon)
    rbl, rlb, one_m, b1, d1, b2l, d2l, q1, q2 = _pieces(lam, beta, alpha, epsilon)
    t1 = 1.0 + beta * one_m * epsilon / (alpha * lam)
    t2 = 1.0 + lam * one_m * epsilon / (alpha * beta)
    frac1 = alpha ** (2.0 + 2.0 * rbl) * t1 / q1
    frac2 = alpha ** (2.0 + 2.0 * rlb) * t2 / q2
    c2 = (1.0 + frac1) / (one_m * (lam + 2.0 * beta))
    c1 = -beta * (1.0 + frac2) / (one_m * (2.0 * lam + beta))
    inv_p1 = alpha ** (2.0 + rbl) / q1
    inv_p2 = alpha ** (2.0 + rlb) / q2
    c3 = ((d2l - d1) + (b2l - b1)
          - (b1 * epsilon + d1) * inv_p1
          + (epsilon * b2l + d2l) * inv_p2)
    return CConstants(c1=c1, c2=c2, c3=c3)


def k1_from_k0(k0: float, lam: float, beta: float, alpha: float, epsilon: float) -> float:
    """K1 from the first-order zero of f1 at the lower cutoff.

    epsilon = 0 is permitted when lam == beta (the denominator reduces to
    -alpha^(-(1+beta/lam)) and the result matches the closed-form K1).
    """
    _validate(lam, beta, alpha, epsilon)
    if k0 <= 0:
        raise ParameterError("k0 must be positive")
    rbl, _, one_m, b1, d1, _, _, q1, _ = _pieces(lam, beta, alpha, epsilon)
    t1 = 1.0 + beta * one_m * epsilon / (alpha * lam)
    num = k0 * alpha ** rbl * t1 / ((lam + 2.0 * beta) * one_m) + b1 * epsilon + d1
    return num * alpha ** (2.0 + rbl) / q1


def k2_from_k0(k0: float, lam: float, beta: float, alpha: float, epsilon: float) -> float:
    """K2 from the first-order zero of f2 at the lower cutoff."""
    _validate(lam, beta, alpha, epsilon)
    if k0 <= 0:
        raise ParameterError("k0 must be positive")
    _, rlb, one_m, _, _, b2l, d2l, _, q2 = _pieces(lam, beta, alpha, epsilon)
    t2 = 1.0 + lam * one_m * epsilon / (alpha * beta)
    num = (lam * beta * k0 ** (-rlb) * alpha ** rlb * t2 / ((2.0 * lam + beta) * one_m)
           + lam * b2l * epsilon + lam * d2l)
    return num * alpha ** (2.0 + rlb) / q2


def fixed_point_residual(k0: float, c: CConstants, lam: float, beta: float) -> float:
    """|C2*K0 + C1*K0^(-lam/beta) - C3| for a candidate K0."""
    return abs(c.c2 * k0 + c.c1 * k0 ** (-lam / beta) - c.c3)


def _solution_family(k0: float, lam: float, beta: float, alpha: float,
                     epsilon: float, order: int | None) -> EquilibriumSolution:
    return EquilibriumSolution(
        k0=k0,
        k1=k1_from_k0(k0, lam, beta, alpha, epsilon),
        k2=k2_from_k0(k0, lam, beta, alpha, epsilon),
        method=SolutionMethod.ITERATED_GENERAL,
        order=order,
    )


def _converge(c: CConstants, ratio: float, tol: float, max_iter: int):
    """Relaxed successive substitution on the K0 update map.

    The relaxation factor shrinks when the bare update stops contracting
    and is what allows convergence in the repelling regime; with a
    contracting map it stays at 1 and this is plain successive
    substitution.  Convergence is declared on the bare update increment,
    so the returned value satisfies the fixed-point equation itself to
    ~C2*tol regardless of the relaxation path.
    """
    k = 1.0
    trace = [k]
    omegas: list[float] = []
    omega = 1.0
    prev_step = None
    best_k, best_res = k, math.inf
    converged = False
    for _ in range(max_iter):
        m = (c.c3 - c.c1 * k ** (-ratio)) / c.c2
        if not math.isfinite(m):
            raise DivergenceError(
                f"fixed-point update produced a non-finite value at k0={k}", trace)
        step = m - k
        if abs(step) < best_res:
            best_k, best_res = k, abs(step)
        if abs(step) <= tol:
            k = m
            trace.append(k)
            omegas.append(1.0)
            converged = True
            break
        if prev_step is not None and abs(step) > 0.9 * prev_step:
            omega = max(omega * 0.5, 1e-6)
        else:
            omega = min(1.0, omega * 1.3)
        k_new = k + omega * step
        while k_new <= 0.0:
            omega *= 0.5
            if omega < 1e-15:
                raise DivergenceError(
                    "iterate driven nonpositive; K0^(-lam/beta) undefined", trace)
            k_new = k + omega * step
        prev_step = abs(step)
        k = k_new
        trace.append(k)
        omegas.append(omega)
    else:
        k = best_k  # best iterate under the bare-update residual
    return k, trace, omegas, converged


def iterate_k0(lam: float, beta: float, alpha: float, epsilon: float,
               mode: str = "order2", tol: float = 1e-10, max_iter: int = 100
               ) -> tuple[EquilibriumSolution, SolverDiagnostics]:
    """Solve the fixed-point condition for K0 and assemble the solution.

    mode:
      order0    K0 = 1 (the zeroth approximation)
      order1    one bare substitution, (C3 - C1)/C2
      order2    two bare substitutions (the default reported value)
      converge  relaxed iteration until the bare update increment is
                below tol or max_iter is reached

    Raises DivergenceError when an iterate would go nonpositive or
    non-finite.  A non-converged run is flagged in the diagnostics and
    the best iterate is returned.
    """
    if mode not in ITERATE_MODES:
        raise ParameterError(f"mode must be one of {ITERATE_MODES}, got {mode!r}")
    if tol <= 0 or max_iter < 1:
        raise ParameterError("tol must be positive and max_iter >= 1")
    c = c_constants(lam, beta, alpha, epsilon)
    ratio = lam / beta

    converged = True
    omegas: tuple[float, ...] = ()
    if mode == "order0":
        trace = [1.0]
        order: int | None = 0
    elif mode == "order1":
        k1st = (c.c3 - c.c1) / c.c2
        trace = [1.0, k1st]
        order = 1
    elif mode == "order2":
        k1st = (c.c3 - c.c1) / c.c2
        if k1st <= 0:
            raise DivergenceError(
                f"first-order value {k1st} is nonpositive; cannot take "
                f"K0^(-lam/beta)", [1.0, k1st])
        k2nd = c.c3 / c.c2 - (c.c1 / c.c2) * k1st ** (-ratio)
        trace = [1.0, k1st, k2nd]
        order = 2
    else:
        k_fin, trace, omega_list, converged = _converge(c, ratio, tol, max_iter)
        omegas = tuple(omega_list)
        order = None

    k0 = trace[-1] if mode != "converge" else k_fin
    if k0 <= 0 or not math.isfinite(k0):
        raise DivergenceError(f"final K0 iterate {k0} is not usable", trace)

    sol = _solution_family(k0, lam, beta, alpha, epsilon, order)
    f1_lo, f2_lo = eval_general_strategy(epsilon, sol, lam, beta, alpha, epsilon)
    f1_hi, f2_hi = eval_general_strategy(1.0, sol, lam, beta, alpha, epsilon)
    diag = SolverDiagnostics(
        k0_trace=tuple(trace),
        residual_bc_left1=abs(f1_lo),
        residual_bc_left2=abs(f2_lo),
        residual_bc_right=abs(f1_hi - f2_hi / lam),
        fixed_point_residual=fixed_point_residual(k0, c, lam, beta),
        converged=converged,
        omega_trace=omegas,
    )
    return sol, diag


def eval_general_strategy(r, sol: EquilibriumSolution, lam: float, beta: float,
                          alpha: float, epsilon: float):
    """Evaluate the general strategy family (f1, f2) on r in [epsilon, 1].

    Uses the solution's constants directly; the second-order reported
    strategies are exactly this evaluation with the order-2 K0.
    Scalars or numpy arrays accepted.
    """
    _validate(lam, beta, alpha, epsilon)
    arr = np.asarray(r, dtype=float)
    if np.any(arr < epsilon) or np.any(arr > 1.0):
        raise ParameterError(f"r must lie in [{epsilon}, 1] for the general strategies")
    rbl = beta / lam
    rlb = lam / beta
    one_m = 1.0 - alpha
    u = one_m * arr + alpha
    f1 = (sol.k0 * u ** rbl / ((lam + 2.0 * beta) * one_m)
          + beta * arr / (beta + 2.0 * lam)
          - alpha * (beta * lam + beta + 2.0 * lam) / ((beta + lam) * (beta + 2.0 * lam) * one_m)
          + sol.k1 * u ** (-(1.0 + rbl)))
    f2 = (lam * beta * sol.k0 ** (-rlb) * u ** rlb / ((2.0 * lam + beta) * one_m)
          + lam * arr / (2.0 * beta + lam)
          - alpha * beta * lam * (1.0 + 2.0 * beta + lam) / ((beta + lam) * (2.0 * beta + lam) * one_m)
          + sol.k2 * u ** (-(1.0 + rlb)))
    if np.isscalar(r) or arr.ndim == 0:
        return float(f1), float(f2)
    return f1, f2
