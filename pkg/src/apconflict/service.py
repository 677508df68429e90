"""Request/response models and handlers shared by the HTTP API and the CLI.

The handlers are plain functions on pydantic models; the FastAPI app and
the command line are both thin clients of this layer.
"""

from __future__ import annotations

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .equal import (EquilibriumSolution, SolutionMethod, boundary_coefficients,
                    eval_equal_strategy, solve_equal)
from .errors import ParameterError
from .general import (SolverDiagnostics, eval_general_strategy, iterate_k0,
                      k1_from_k0, k2_from_k0)
from .model import ConflictRatios, CountryParams, normalize_ratios
from .oracle import (DEFAULT_GRID_SIZE, StrategyTable, best_response,
                     build_strategy_table, endpoint_gap, ode_residual,
                     solve_k0_root)
from .simulate import EQUAL_CLOSED_FORM, GENERAL_ITERATED, SimulationSummary, simulate

Method = Literal["auto", "equal", "order0", "order1", "order2", "converge", "root"]

_RAW_FIELDS = ("lambda1_tilde", "beta1_tilde", "R1", "lambda2_tilde", "beta2_tilde", "R2")


class ParamsIn(BaseModel):
    """Model parameters, either as ratios or as raw per-country values.

    Ratio mode: lambda, beta (country 1 over country 2).  Raw mode:
    lambda1_tilde, beta1_tilde, R1, lambda2_tilde, beta2_tilde, R2.
    Ratio fields take precedence when both are present.  epsilon defaults
    to 0 in the equal case and 1e-3 otherwise.
    """

    model_config = ConfigDict(populate_by_name=True)

    lam: float | None = Field(None, alias="lambda", gt=0)
    beta: float | None = Field(None, gt=0)
    lambda1_tilde: float | None = Field(None, gt=0)
    beta1_tilde: float | None = Field(None, gt=0)
    R1: float | None = Field(None, gt=0)
    lambda2_tilde: float | None = Field(None, gt=0)
    beta2_tilde: float | None = Field(None, gt=0)
    R2: float | None = Field(None, gt=0)
    alpha: float = Field(ge=0, lt=1)
    epsilon: float | None = Field(None, ge=0, lt=0.1)

    @model_validator(mode="after")
    def _check_mode(self):
        ratio_mode = self.lam is not None and self.beta is not None
        raw_given = [f for f in _RAW_FIELDS if getattr(self, f) is not None]
        if not ratio_mode and len(raw_given) != len(_RAW_FIELDS):
            raise ValueError(
                "give either both ratio fields (lambda, beta) or all raw "
                f"fields {_RAW_FIELDS}; got raw fields {raw_given or 'none'}")
        return self

    def to_ratios(self) -> ConflictRatios:
        if self.lam is not None and self.beta is not None:
            return ConflictRatios.from_ratios(self.lam, self.beta, self.alpha, self.epsilon)
        c1 = CountryParams(self.lambda1_tilde, self.beta1_tilde, self.R1)
        c2 = CountryParams(self.lambda2_tilde, self.beta2_tilde, self.R2)
        return normalize_ratios(c1, c2, self.alpha, self.epsilon)


class RatiosOut(BaseModel):
    model_config = ConfigDict(populate_by_name=True)
    lam: float = Field(alias="lambda")
    beta: float
    alpha: float
    epsilon: float
    swapped: bool

    @classmethod
    def from_ratios(cls, p: ConflictRatios) -> "RatiosOut":
        return cls(lam=p.lam, beta=p.beta, alpha=p.alpha,
                   epsilon=p.epsilon, swapped=p.swapped)


class SolutionOut(BaseModel):
    k0: float
    k1: float
    k2: float
    method: str
    order: int | None = None

    @classmethod
    def from_solution(cls, s: EquilibriumSolution) -> "SolutionOut":
        return cls(k0=s.k0, k1=s.k1, k2=s.k2, method=s.method.value, order=s.order)


class DiagnosticsOut(BaseModel):
    k0_trace: list[float]
    residual_bc_left1: float
    residual_bc_left2: float
    residual_bc_right: float
    fixed_point_residual: float
    converged: bool

    @classmethod
    def from_diagnostics(cls, d: SolverDiagnostics) -> "DiagnosticsOut":
        return cls(k0_trace=list(d.k0_trace),
                   residual_bc_left1=d.residual_bc_left1,
                   residual_bc_left2=d.residual_bc_left2,
                   residual_bc_right=d.residual_bc_right,
                   fixed_point_residual=d.fixed_point_residual,
                   converged=d.converged)


class TableOut(BaseModel):
    r: list[float]
    f1: list[float]
    f2: list[float]
    feasible1: list[bool]
    feasible2: list[bool]

    @classmethod
    def from_table(cls, t: StrategyTable) -> "TableOut":
        return cls(r=t.r.tolist(), f1=t.f1.tolist(), f2=t.f2.tolist(),
                   feasible1=t.feasible1.tolist(), feasible2=t.feasible2.tolist())


class SolveRequest(BaseModel):
    params: ParamsIn
    method: Method = "auto"
    grid_size: int = Field(DEFAULT_GRID_SIZE, ge=2)


class SolveResponse(BaseModel):
    ratios: RatiosOut
    solution: SolutionOut
    diagnostics: DiagnosticsOut
    table: TableOut


class BestResponseCheck(BaseModel):
    r1: float
    strategy_bid: float
    oracle_bid: float
    gap: float


class VerifyRequest(BaseModel):
    params: ParamsIn
    method: Method = "auto"
    grid_size: int = Field(DEFAULT_GRID_SIZE, ge=512)
    probes: list[float] = Field(default=[0.25, 0.5, 0.75], min_length=1)
    tol_best_response: float | None = Field(None, gt=0)
    tol_ode: float | None = Field(None, gt=0)
    tol_k0: float | None = Field(None, gt=0)


class VerifyResponse(BaseModel):
    ratios: RatiosOut
    solution: SolutionOut
    best_response: list[BestResponseCheck]
    max_best_response_gap: float
    ode_residual_1: float
    ode_residual_2: float
    k0_solver: float
    k0_root: float
    k0_gap: float
    tol_best_response: float
    tol_ode: float
    tol_k0: float | None
    passed: bool
    failures: list[str]


class SimulateRequest(BaseModel):
    params: ParamsIn
    method: Method = "auto"
    n: int = Field(ge=1)
    seed: int = Field(0, ge=0, lt=1 << 64)


class SimulateResponse(BaseModel):
    ratios: RatiosOut
    method: str
    n_draws: int
    win_prob_1: float
    win_prob_2: float
    tie_prob: float
    mean_payoff_1: float
    mean_payoff_2: float
    mean_transfer: float
    mean_total_production: float
    infeasible_bid_rate: float
    seed: int

    @classmethod
    def from_summary(cls, p: ConflictRatios, method: str,
                     s: SimulationSummary) -> "SimulateResponse":
        return cls(ratios=RatiosOut.from_ratios(p), method=method,
                   n_draws=s.n_draws, win_prob_1=s.win_prob_1,
                   win_prob_2=s.win_prob_2, tie_prob=s.tie_prob,
                   mean_payoff_1=s.mean_payoff_1, mean_payoff_2=s.mean_payoff_2,
                   mean_transfer=s.mean_transfer,
                   mean_total_production=s.mean_total_production,
                   infeasible_bid_rate=s.infeasible_bid_rate, seed=s.seed)


class SweepAxis(BaseModel):
    param: Literal["lambda", "beta", "alpha", "epsilon"]
    start: float
    stop: float
    steps: int = Field(ge=2)


class SweepRequest(BaseModel):
    params: ParamsIn
    axis: SweepAxis
    method: Method = "auto"
    n: int = Field(20000, ge=1)
    seed: int = Field(0, ge=0, lt=1 << 64)


class SweepRow(BaseModel):
    model_config = ConfigDict(populate_by_name=True)
    value: float
    lam: float = Field(alias="lambda")
    beta: float
    alpha: float
    epsilon: float
    swapped: bool
    k0: float
    residual_bc_left1: float
    residual_bc_left2: float
    residual_bc_right: float
    converged: bool
    win_prob_1: float


class SweepResponse(BaseModel):
    param: str
    rows: list[SweepRow]


def _resolve_method(params: ConflictRatios, method: str) -> str:
    if method == "auto":
        return "equal" if params.equal_case else "order2"
    return method


def _equal_diagnostics(params: ConflictRatios, sol: EquilibriumSolution) -> SolverDiagnostics:
    f1_lo, f2_lo = eval_equal_strategy(params.epsilon, params.beta, params.alpha)
    f1_hi, f2_hi = eval_equal_strategy(1.0, params.beta, params.alpha)
    coeffs = boundary_coefficients(params.lam, params.beta, params.alpha)
    return SolverDiagnostics(
        k0_trace=(1.0,),
        residual_bc_left1=abs(f1_lo),
        residual_bc_left2=abs(f2_lo),
        residual_bc_right=abs(f1_hi - f2_hi / params.lam),
        fixed_point_residual=abs(endpoint_gap(sol.k0, coeffs, params.lam, params.beta)) / params.lam,
        converged=True,
    )


def _root_solution(params: ConflictRatios) -> tuple[EquilibriumSolution, SolverDiagnostics]:
    k0 = solve_k0_root(params.lam, params.beta, params.alpha)
    if params.equal_case:
        base = solve_equal(params.beta, params.alpha)
        sol = EquilibriumSolution(k0=k0, k1=base.k1, k2=base.k2,
                                  method=SolutionMethod.ROOT_FOUND)
    else:
        sol = EquilibriumSolution(
            k0=k0,
            k1=k1_from_k0(k0, params.lam, params.beta, params.alpha, params.epsilon),
            k2=k2_from_k0(k0, params.lam, params.beta, params.alpha, params.epsilon),
            method=SolutionMethod.ROOT_FOUND,
        )
    if params.equal_case:
        f1_lo, f2_lo = eval_equal_strategy(params.epsilon, params.beta, params.alpha)
        f1_hi, f2_hi = eval_equal_strategy(1.0, params.beta, params.alpha)
    else:
        f1_lo, f2_lo = eval_general_strategy(params.epsilon, sol, params.lam,
                                             params.beta, params.alpha, params.epsilon)
        f1_hi, f2_hi = eval_general_strategy(1.0, sol, params.lam,
                                             params.beta, params.alpha, params.epsilon)
    coeffs = boundary_coefficients(params.lam, params.beta, params.alpha)
    diag = SolverDiagnostics(
        k0_trace=(1.0, k0),
        residual_bc_left1=abs(f1_lo),
        residual_bc_left2=abs(f2_lo),
        residual_bc_right=abs(f1_hi - f2_hi / params.lam),
        fixed_point_residual=abs(endpoint_gap(k0, coeffs, params.lam, params.beta)) / params.lam,
        converged=True,
    )
    return sol, diag


def solve_for(params: ConflictRatios, method: str
              ) -> tuple[EquilibriumSolution, SolverDiagnostics, str]:
    """Produce (solution, diagnostics, resolved_method) for any method name."""
    method = _resolve_method(params, method)
    if method == "equal":
        if not params.equal_case:
            raise ParameterError("method 'equal' requires lam == beta")
        sol = solve_equal(params.beta, params.alpha)
        return sol, _equal_diagnostics(params, sol), method
    if method == "root":
        sol, diag = _root_solution(params)
        return sol, diag, method
    sol, diag = iterate_k0(params.lam, params.beta, params.alpha,
                           params.epsilon, mode=method)
    return sol, diag, method


def run_solve(req: SolveRequest) -> SolveResponse:
    params = req.params.to_ratios()
    sol, diag, _ = solve_for(params, req.method)
    table = build_strategy_table(params, sol, req.grid_size)
    return SolveResponse(ratios=RatiosOut.from_ratios(params),
                         solution=SolutionOut.from_solution(sol),
                         diagnostics=DiagnosticsOut.from_diagnostics(diag),
                         table=TableOut.from_table(table))


def run_verify(req: VerifyRequest) -> VerifyResponse:
    params = req.params.to_ratios()
    sol, _, method = solve_for(params, req.method)
    table = build_strategy_table(params, sol, req.grid_size)

    tol_br = req.tol_best_response
    if tol_br is None:
        # quadrature-limited in the equal case; first-order boundary
        # treatment adds O(epsilon) slack in the general case
        tol_br = 1e-3 if method == "equal" else 5e-3
    tol_ode = req.tol_ode
    if tol_ode is None:
        # general-case strategies have larger curvature near the cutoff,
        # so the finite-difference floor sits higher
        tol_ode = 1e-6 if method == "equal" else 1e-5

    checks = []
    failures = []
    lo, hi = float(table.r[0]), float(table.r[-1])
    for r1 in req.probes:
        if not lo <= r1 <= hi:
            raise ParameterError(f"probe {r1} outside the strategy domain [{lo}, {hi}]")
        strategy_bid = float(np.interp(r1, table.r, table.f1))
        oracle_bid = best_response(r1, table)
        gap = abs(oracle_bid - strategy_bid)
        checks.append(BestResponseCheck(r1=r1, strategy_bid=strategy_bid,
                                        oracle_bid=oracle_bid, gap=gap))
    max_gap = max(c.gap for c in checks)
    if max_gap > tol_br:
        failures.append(f"best-response gap {max_gap:.3e} exceeds {tol_br:.3e}")

    res1, res2 = ode_residual(table)
    if max(res1, res2) > tol_ode:
        failures.append(f"ode residual {max(res1, res2):.3e} exceeds {tol_ode:.3e}")

    k0_root = solve_k0_root(params.lam, params.beta, params.alpha)
    k0_gap = abs(sol.k0 - k0_root)
    if req.tol_k0 is not None and k0_gap > req.tol_k0:
        failures.append(f"k0 gap to endpoint root {k0_gap:.3e} exceeds {req.tol_k0:.3e}")

    return VerifyResponse(
        ratios=RatiosOut.from_ratios(params),
        solution=SolutionOut.from_solution(sol),
        best_response=checks,
        max_best_response_gap=max_gap,
        ode_residual_1=res1,
        ode_residual_2=res2,
        k0_solver=sol.k0,
        k0_root=k0_root,
        k0_gap=k0_gap,
        tol_best_response=tol_br,
        tol_ode=tol_ode,
        tol_k0=req.tol_k0,
        passed=not failures,
        failures=failures,
    )


def run_simulate(req: SimulateRequest, threads: int | None = None,
                 trace=None) -> SimulateResponse:
    params = req.params.to_ratios()
    method = _resolve_method(params, req.method)
    if method == "equal":
        source = EQUAL_CLOSED_FORM
        solution = None
    else:
        source = GENERAL_ITERATED
        solution, _, _ = solve_for(params, method)
    summary = simulate(params, source, req.n, req.seed,
                       solution=solution, threads=threads, trace=trace)
    return SimulateResponse.from_summary(params, method, summary)


def run_sweep(req: SweepRequest, threads: int | None = None) -> SweepResponse:
    base = req.params.to_ratios()
    values = np.linspace(req.axis.start, req.axis.stop, req.axis.steps)

    # validate the whole axis before doing any work
    points: list[tuple[float, ConflictRatios]] = []
    for value in values:
        kwargs = {"lam": base.lam, "beta": base.beta, "alpha": base.alpha,
                  "epsilon": base.epsilon}
        key = "lam" if req.axis.param == "lambda" else req.axis.param
        kwargs[key] = float(value)
        if req.axis.param != "epsilon" and req.params.epsilon is None:
            # keep the per-point default rule when epsilon was not pinned
            kwargs["epsilon"] = None
        points.append((float(value), ConflictRatios.from_ratios(**kwargs)))

    rows = []
    for value, params in points:
        sol, diag, method = solve_for(params, req.method)
        source = EQUAL_CLOSED_FORM if method == "equal" else GENERAL_ITERATED
        summary = simulate(params, source, req.n, req.seed,
                           solution=None if method == "equal" else sol,
                           threads=threads)
        rows.append(SweepRow(
            value=value, lam=params.lam, beta=params.beta, alpha=params.alpha,
            epsilon=params.epsilon, swapped=params.swapped, k0=sol.k0,
            residual_bc_left1=diag.residual_bc_left1,
            residual_bc_left2=diag.residual_bc_left2,
            residual_bc_right=diag.residual_bc_right,
            converged=diag.converged, win_prob_1=summary.win_prob_1))
    return SweepResponse(param=req.axis.param, rows=rows)
