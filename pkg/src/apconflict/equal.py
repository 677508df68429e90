"""Closed-form quasi-equilibria for the equal-ratio case lam == beta.

When neither country has a comparative advantage (lam == beta) the
endpoint condition reduces to a quadratic in the coupling constant K0
with roots {1, -beta}; only the positive root is admissible, so K0 = 1
is hard-coded.  The remaining constants then have closed forms and the
strategy pair satisfies f2 = beta * f1 identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ParameterError


class SolutionMethod(Enum):
    CLOSED_FORM_EQUAL = "closed_form_equal"
    ITERATED_GENERAL = "iterated_general"
    ROOT_FOUND = "root_found"


@dataclass(frozen=True)
class EquilibriumSolution:
    """Constants (k0, k1, k2) pinning one mutual-best-response pair.

    ``order`` is the iteration order for iterated general solutions
    (None for a run-to-convergence solve or for the other methods).
    """

    k0: float
    k1: float
    k2: float
    method: SolutionMethod
    order: int | None = None

    def __post_init__(self):
        if not (math.isfinite(self.k0) and self.k0 > 0.0):
            raise ParameterError(f"k0 must be positive and finite, got {self.k0}")


@dataclass(frozen=True)
class BoundaryCoefficients:
    """Coefficients of the endpoint condition a*K0 + b*K0^(-lam/beta) = c."""

    a: float
    b: float
    c: float


def _check_alpha_solver(alpha: float) -> float:
    if not (isinstance(alpha, (int, float)) and math.isfinite(alpha)):
        raise ParameterError(f"alpha must be a finite number, got {alpha!r}")
    if not 0.0 <= alpha < 1.0:
        raise ParameterError(f"alpha must lie in [0, 1) for the solvers, got {alpha}")
    return float(alpha)


def boundary_coefficients(lam: float, beta: float, alpha: float) -> BoundaryCoefficients:
    """Coefficients of the zero-cutoff endpoint condition on K0.

    a is positive and b nonpositive for alpha in [0, 1), which makes
    g(K0) = a*K0 + b*K0^(-lam/beta) - c strictly increasing on (0, inf).
    """
    if lam <= 0 or beta <= 0:
        raise ParameterError("lam and beta must be positive")
    alpha = _check_alpha_solver(alpha)
    a = lam * (1.0 - alpha ** (1.0 + 2.0 * beta / lam)) / ((lam + 2.0 * beta) * (1.0 - alpha))
    b = lam * beta * (1.0 - alpha ** (1.0 + 2.0 * lam / beta)) / ((2.0 * lam + beta) * (alpha - 1.0))
    c = (-beta * lam / (beta + 2.0 * lam)
         + alpha * lam * (beta * lam + beta + 2.0 * lam)
         * (1.0 - alpha ** (1.0 + beta / lam))
         / ((beta + lam) * (beta + 2.0 * lam) * (1.0 - alpha))
         + lam / (2.0 * beta + lam)
         - alpha * beta * lam * (1.0 + 2.0 * beta + lam)
         * (1.0 - alpha ** (1.0 + lam / beta))
         / ((beta + lam) * (2.0 * beta + lam) * (1.0 - alpha)))
    return BoundaryCoefficients(a=a, b=b, c=c)


def solve_equal(beta: float, alpha: float) -> EquilibriumSolution:
    """Exact solution constants for lam == beta.

    K0 = 1 (the admissible root of the endpoint quadratic) and

        K1 = alpha^3 (beta + 1) / (6 beta (1 - alpha))
        K2 = alpha^3 (beta + 1) / (6 (1 - alpha))
    """
    if beta <= 0:
        raise ParameterError("beta must be positive")
    alpha = _check_alpha_solver(alpha)
    k1 = alpha ** 3 * (beta + 1.0) / (6.0 * beta * (1.0 - alpha))
    k2 = alpha ** 3 * (beta + 1.0) / (6.0 * (1.0 - alpha))
    return EquilibriumSolution(k0=1.0, k1=k1, k2=k2,
                               method=SolutionMethod.CLOSED_FORM_EQUAL)


def _eval_one(r, beta: float, alpha: float, scale: float):
    # One closed-form branch: linear term, constant, and the K/u^2 tail
    # with u = (1-alpha)*r + alpha.  Written so that r=0 subtracts the
    # constant from an identical K/alpha^2 evaluation, making f(0) exactly
    # zero; at alpha=0 the tail vanishes with K = 0 (naive substitution
    # would hit 0/0 at r=0).
    lin = (beta + 1.0) / (3.0 * scale)
    if alpha == 0.0:
        return lin * r
    k = alpha ** 3 * (beta + 1.0) / (6.0 * scale * (1.0 - alpha))
    u = (1.0 - alpha) * r + alpha
    return lin * r - k / alpha ** 2 + k / u ** 2


def eval_equal_strategy(r, beta: float, alpha: float):
    """Evaluate the equal-case strategy pair (f1, f2) at r in [0, 1].

    Accepts scalars or numpy arrays.  Both strategies are evaluated from
    their own closed forms; the pair satisfies f2 == beta * f1 and
    f1(0) == f2(0) == 0.
    """
    if beta <= 0:
        raise ParameterError("beta must be positive")
    alpha = _check_alpha_solver(alpha)
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ParameterError("r must lie in [0, 1] for the equal-case strategies")
    f1 = _eval_one(arr, beta, alpha, scale=beta)
    f2 = _eval_one(arr, beta, alpha, scale=1.0)
    if np.isscalar(r) or arr.ndim == 0:
        return float(f1), float(f2)
    return f1, f2


def equal_strategy_derivative(r, beta: float, alpha: float):
    """Analytic derivative of f1; nonnegative on [0, 1] (monotone strategies)."""
    alpha = _check_alpha_solver(alpha)
    arr = np.asarray(r, dtype=float)
    lead = (beta + 1.0) / (3.0 * beta)
    if alpha == 0.0:
        return np.full_like(arr, lead) if arr.ndim else lead
    shift = arr + alpha / (1.0 - alpha)
    return lead * (1.0 - alpha ** 3 / ((1.0 - alpha) ** 3 * shift ** 3))
