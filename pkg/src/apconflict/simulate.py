"""Monte-Carlo simulation of conflicts under equilibrium bidding.

Private draws come from a counter-based generator keyed by the seed, with
draw index i consuming a fixed pair of stream positions (2i, 2i+1).  Work
is split into fixed-size chunks whose partial sums are combined in chunk
order, so results are bit-identical for a given (params, n, seed) no
matter how many worker threads run the chunks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .equal import EquilibriumSolution, SolutionMethod, eval_equal_strategy, solve_equal
from .errors import ParameterError
from .general import eval_general_strategy, iterate_k0
from .model import ConflictRatios

# Sources of the strategy pair applied to the draws.
EQUAL_CLOSED_FORM = "equal"
GENERAL_ITERATED = "general"
SOURCES = (EQUAL_CLOSED_FORM, GENERAL_ITERATED)

# Fixed chunk length (must stay even: the counter advances in blocks of
# four 64-bit outputs = two draws).  Changing it changes summation order,
# not correctness, but would break byte-for-byte reproducibility of
# recorded results.
CHUNK = 1 << 16

THREADS_ENV = "APC_THREADS"

TRACE_HEADER = ("draw", "r1", "r2", "b1", "b2", "winner", "w1", "w2")


@dataclass(frozen=True)
class SimulationSummary:
    """Aggregates of a simulation run, reproducible from (params, n, seed).

    mean_transfer is the average production value changing hands through
    the winner's (1 - alpha) share; infeasible_bid_rate counts draws where
    either bid fell outside [0, r].  Payoffs are in ratio units (country
    2's production rate normalized to 1).
    """

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


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit argument, else APC_THREADS (0 = auto)."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "0")
        try:
            threads = int(raw)
        except ValueError:
            raise ParameterError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if threads < 0:
        raise ParameterError("thread count must be >= 0")
    if threads == 0:
        threads = min(os.cpu_count() or 1, 8)
    return threads


def _uniform_pairs(seed: int, start: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    # One counter block yields four 64-bit outputs = two draws, so chunk
    # starts must be even for the advance to land on a block boundary.
    assert start % 2 == 0
    bg = np.random.Philox(key=seed)
    bg.advance(start // 2)
    u = np.random.Generator(bg).random(2 * count)
    return u[0::2], u[1::2]


def _resolve_solution(params: ConflictRatios, source: str,
                      solution: EquilibriumSolution | None) -> EquilibriumSolution:
    if source not in SOURCES:
        raise ParameterError(f"solution_source must be one of {SOURCES}, got {source!r}")
    if solution is not None:
        return solution
    if source == EQUAL_CLOSED_FORM:
        if not params.equal_case:
            raise ParameterError("equal closed form requires lam == beta")
        return solve_equal(params.beta, params.alpha)
    sol, _ = iterate_k0(params.lam, params.beta, params.alpha, params.epsilon)
    return sol


def draw_outcomes(params: ConflictRatios, solution: EquilibriumSolution,
                  seed: int, start: int, count: int, lo: float) -> dict[str, np.ndarray]:
    """Resolve draws [start, start+count) and return per-draw arrays."""
    u1, u2 = _uniform_pairs(seed, start, count)
    r1 = lo + (1.0 - lo) * u1
    r2 = lo + (1.0 - lo) * u2
    if solution.method is SolutionMethod.CLOSED_FORM_EQUAL:
        b1, _ = eval_equal_strategy(r1, params.beta, params.alpha)
        _, b2 = eval_equal_strategy(r2, params.beta, params.alpha)
    else:
        b1, _ = eval_general_strategy(r1, solution, params.lam, params.beta,
                                      params.alpha, params.epsilon)
        _, b2 = eval_general_strategy(r2, solution, params.lam, params.beta,
                                      params.alpha, params.epsilon)
    lam, beta, alpha = params.lam, params.beta, params.alpha
    p1 = beta * (r1 - b1)
    p2 = r2 - b2
    s1 = lam * b1
    wins1 = s1 > b2
    wins2 = s1 < b2
    tie = ~(wins1 | wins2)
    w1 = np.where(wins1, p1 + (1.0 - alpha) * p2, np.where(tie, p1, alpha * p1))
    w2 = np.where(wins2, p2 + (1.0 - alpha) * p1, np.where(tie, p2, alpha * p2))
    transfer = np.where(wins1, (1.0 - alpha) * p2,
                        np.where(wins2, (1.0 - alpha) * p1, 0.0))
    infeasible = (b1 < 0.0) | (b1 > r1) | (b2 < 0.0) | (b2 > r2)
    winner = np.where(wins1, 1, np.where(wins2, 2, 0))
    return {"r1": r1, "r2": r2, "b1": b1, "b2": b2, "winner": winner,
            "w1": w1, "w2": w2, "transfer": transfer, "total": p1 + p2,
            "infeasible": infeasible}


def _chunk_stats(arrays: dict[str, np.ndarray]) -> tuple:
    winner = arrays["winner"]
    return (int(np.count_nonzero(winner == 1)),
            int(np.count_nonzero(winner == 2)),
            int(np.count_nonzero(winner == 0)),
            int(np.count_nonzero(arrays["infeasible"])),
            float(np.sum(arrays["w1"])),
            float(np.sum(arrays["w2"])),
            float(np.sum(arrays["transfer"])),
            float(np.sum(arrays["total"])))


def simulate(params: ConflictRatios, solution_source: str, n: int, seed: int,
             solution: EquilibriumSolution | None = None,
             threads: int | None = None,
             trace=None) -> SimulationSummary:
    """Simulate n independent conflicts and aggregate the outcomes.

    Draws are uniform on [0, 1] for the equal closed form and on
    [epsilon, 1] for the general source, matching each strategy's domain.
    ``trace``, if given, is a writable text stream receiving one CSV row
    per draw (header: draw,r1,r2,b1,b2,winner,w1,w2; winner is 1, 2 or 0
    for a tie).  Identical (params, n, seed) give bit-identical summaries
    for any thread count.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    if seed < 0 or seed >= 1 << 64:
        raise ParameterError("seed must be an unsigned 64-bit integer")
    sol = _resolve_solution(params, solution_source, solution)
    lo = 0.0 if sol.method is SolutionMethod.CLOSED_FORM_EQUAL else params.epsilon

    starts = list(range(0, n, CHUNK))

    def work(start: int) -> tuple:
        count = min(CHUNK, n - start)
        arrays = draw_outcomes(params, sol, seed, start, count, lo)
        if trace is not None:
            _write_trace_rows(trace, start, arrays)
        return _chunk_stats(arrays)

    workers = resolve_threads(threads)
    if workers > 1 and len(starts) > 1 and trace is None:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, starts))
    else:
        # tracing stays sequential so rows appear in draw order
        results = [work(s) for s in starts]

    wins1 = wins2 = ties = infeasible = 0
    sums = [0.0, 0.0, 0.0, 0.0]
    for res in results:  # fixed chunk order keeps the reduction deterministic
        wins1 += res[0]
        wins2 += res[1]
        ties += res[2]
        infeasible += res[3]
        for j in range(4):
            sums[j] += res[4 + j]

    return SimulationSummary(
        n_draws=n,
        win_prob_1=wins1 / n,
        win_prob_2=wins2 / n,
        tie_prob=ties / n,
        mean_payoff_1=sums[0] / n,
        mean_payoff_2=sums[1] / n,
        mean_transfer=sums[2] / n,
        mean_total_production=sums[3] / n,
        infeasible_bid_rate=infeasible / n,
        seed=seed,
    )


def _write_trace_rows(stream, start: int, arrays: dict[str, np.ndarray]) -> None:
    if start == 0:
        stream.write(",".join(TRACE_HEADER) + "\n")
    cols = [arrays[k] for k in ("r1", "r2", "b1", "b2", "winner", "w1", "w2")]
    for i in range(len(cols[0])):
        row = [repr(float(c[i])) if c.dtype.kind == "f" else str(int(c[i]))
               for c in cols]
        stream.write(f"{start + i}," + ",".join(row) + "\n")


def standard_error_bound(n: int) -> float:
    """Worst-case standard error of a win-probability estimate."""
    return 0.5 / math.sqrt(n)
