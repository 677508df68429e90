"""Domain types, parameter normalization and the contest payoff.

Two countries are described by an aggressive strength (effectiveness of
resources diverted to the conflict), a production rate (value of resources
kept out of it) and an expected resource level.  Every downstream formula
depends only on the between-country ratios of aggression and production,
so the engine works in ratio coordinates with country 2's rates
normalized to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import ParameterError

# Default lower cutoff of the private resource variable when the two
# countries differ (lambda != beta).  Small enough that the first-order
# boundary treatment leaves residuals below 1e-5, large enough to stay
# clear of cancellation in the (eps/alpha - 1) denominators.
DEFAULT_EPSILON = 1e-3

EPSILON_MAX = 0.1


class Winner(Enum):
    COUNTRY_1 = "country1"
    COUNTRY_2 = "country2"
    TIE = "tie"


def _require_positive_finite(value: float, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParameterError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ParameterError(f"{name} must be positive and finite, got {value}")
    return value


@dataclass(frozen=True)
class CountryParams:
    """Raw public description of one country.

    aggression: per-unit effectiveness of resources allocated to the conflict
    production: per-unit value of resources kept in production
    expected_resource: expected resource level (scale of the private endowment)
    """

    aggression: float
    production: float
    expected_resource: float

    def __post_init__(self):
        _require_positive_finite(self.aggression, "aggression")
        _require_positive_finite(self.production, "production")
        _require_positive_finite(self.expected_resource, "expected_resource")


@dataclass(frozen=True)
class ConflictRatios:
    """Normalized public parameters of a two-country contest.

    lam:     ratio of aggressive strengths, country 1 over country 2
    beta:    ratio of production rates, country 1 over country 2
    alpha:   fraction of the loser's production value ceded to the winner
    epsilon: lower cutoff of the private resource variable (0 in the
             equal case lam == beta)
    swapped: countries were relabeled so that beta <= lam holds

    The relabeling is without loss of generality: if the raw ratios violate
    beta <= lam, both are inverted and ``swapped`` records it.
    """

    lam: float
    beta: float
    alpha: float
    epsilon: float = 0.0
    swapped: bool = False

    def __post_init__(self):
        _require_positive_finite(self.lam, "lam")
        _require_positive_finite(self.beta, "beta")
        if not (isinstance(self.alpha, (int, float)) and math.isfinite(self.alpha)):
            raise ParameterError(f"alpha must be a finite number, got {self.alpha!r}")
        if not 0.0 <= self.alpha < 1.0:
            raise ParameterError(
                f"alpha must lie in [0, 1); alpha = 1 makes the 1/(1-alpha) "
                f"factors singular (got {self.alpha})"
            )
        if not (isinstance(self.epsilon, (int, float)) and math.isfinite(self.epsilon)):
            raise ParameterError(f"epsilon must be a finite number, got {self.epsilon!r}")
        if not 0.0 <= self.epsilon < EPSILON_MAX:
            raise ParameterError(f"epsilon must lie in [0, {EPSILON_MAX}), got {self.epsilon}")
        if self.beta > self.lam:
            raise ParameterError(
                f"beta <= lam required (relabel countries first); "
                f"got beta={self.beta}, lam={self.lam}"
            )
        if self.lam != self.beta and self.epsilon <= 0.0:
            raise ParameterError("epsilon > 0 is required whenever lam != beta")

    @property
    def equal_case(self) -> bool:
        return self.lam == self.beta

    @classmethod
    def from_ratios(cls, lam: float, beta: float, alpha: float,
                    epsilon: float | None = None) -> "ConflictRatios":
        """Build ratios directly, relabeling countries if beta > lam.

        epsilon=None selects 0 for the equal case and DEFAULT_EPSILON
        otherwise.
        """
        lam = _require_positive_finite(lam, "lam")
        beta = _require_positive_finite(beta, "beta")
        swapped = False
        if beta > lam:
            lam, beta = 1.0 / lam, 1.0 / beta
            swapped = True
        if epsilon is None:
            epsilon = 0.0 if lam == beta else DEFAULT_EPSILON
        return cls(lam=lam, beta=beta, alpha=alpha, epsilon=epsilon, swapped=swapped)


def normalize_ratios(c1: CountryParams, c2: CountryParams, alpha: float,
                     epsilon: float | None = None) -> ConflictRatios:
    """Reduce raw country parameters to ratio coordinates.

    The maximum-scale normalization applies one common constant to both
    countries, so it cancels in the ratios and the expected resource
    levels drop out: lam = aggression1/aggression2, beta =
    production1/production2.  Countries are relabeled when needed to
    enforce beta <= lam.
    """
    lam = c1.aggression / c2.aggression
    beta = c1.production / c2.production
    return ConflictRatios.from_ratios(lam, beta, alpha, epsilon)


@dataclass(frozen=True)
class Bid:
    """A private resource draw together with the resource share bid on it.

    Feasibility b <= r is deliberately not an invariant: equilibrium
    strategies are derived without the constraint and infeasible bids are
    reported downstream rather than rejected here.
    """

    r: float
    b: float

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ParameterError(f"r must lie in [0, 1], got {self.r}")
        if not (math.isfinite(self.b) and self.b >= 0.0):
            raise ParameterError(f"b must be nonnegative and finite, got {self.b}")

    @property
    def feasible(self) -> bool:
        return self.b <= self.r


@dataclass(frozen=True)
class PayoffOutcome:
    w1: float
    w2: float
    winner: Winner


def payoff(r1: float, b1: float, r2: float, b2: float,
           beta1: float, beta2: float, lambda1: float, lambda2: float,
           alpha: float) -> PayoffOutcome:
    """Resolve one contest and return both payoffs.

    The side with the larger aggression product lambda_i * b_i wins, keeps
    its own production beta_i*(r_i - b_i) and gains a fraction (1 - alpha)
    of the loser's; the loser retains only the alpha fraction.  Equal
    products (compared exactly; ties are measure zero under the continuous
    model) leave both sides with their own production.  alpha = 1 is
    allowed here and yields total conquest: the loser forfeits everything.

    In every branch w1 + w2 == beta1*(r1 - b1) + beta2*(r2 - b2).
    """
    for name, v in (("beta1", beta1), ("beta2", beta2),
                    ("lambda1", lambda1), ("lambda2", lambda2)):
        _require_positive_finite(v, name)
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must lie in [0, 1] for the raw payoff, got {alpha}")

    p1 = beta1 * (r1 - b1)
    p2 = beta2 * (r2 - b2)
    s1 = lambda1 * b1
    s2 = lambda2 * b2
    if s1 > s2:
        return PayoffOutcome(w1=p1 + (1.0 - alpha) * p2, w2=alpha * p2,
                             winner=Winner.COUNTRY_1)
    if s1 < s2:
        return PayoffOutcome(w1=alpha * p1, w2=p2 + (1.0 - alpha) * p1,
                             winner=Winner.COUNTRY_2)
    return PayoffOutcome(w1=p1, w2=p2, winner=Winner.TIE)
