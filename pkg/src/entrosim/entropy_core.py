"""Closed-form value-entropy analytics for service ecosystems.

A service ecosystem is modelled as N nodes partitioned into m niches
(equivalence classes of nodes).  This module implements the analytic core:

* Shannon entropy of the niche census, H = -sum(p_j * log2 p_j), measuring
  how disordered the collaboration network is.  H is maximal (log2 n) when
  all niches are equally populated.
* Per-node value-creation efficiency E = gained / consumed.
* The two operating-cost components: management cost c1 = k*(N/m)*log2(N/m)
  (keeping nodes ordered inside niches) and matching cost c2 = k*m*log2(m)
  (finding the right niche for a demand).  Their sum is minimised at
  m = sqrt(N), where c1 = c2 and the optimal entropy is log2(sqrt(N)).
* The cost comparison between a control-dominated ecosystem (cost driven by
  system size) and a random-dominated one (cost driven by demand volume),
  including the demand level d' at which the two costs cross.

Everything here is a pure function of its arguments; no module state.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from typing import NamedTuple, Sequence


class UndefinedEfficiencyError(ValueError):
    """Efficiency is undefined when nothing was consumed over the window."""


def _as_count(value, what: str) -> int:
    try:
        n = operator.index(value)
    except TypeError:
        raise TypeError(f"{what} must be an integer, got {value!r}") from None
    return n


@dataclass(frozen=True)
class NicheDistribution:
    """Census of node counts per niche class.

    Zero counts are allowed (empty classes are ignored by the entropy);
    requesting entropy of an all-zero census is a domain error.
    """

    counts: tuple[int, ...]

    def __init__(self, counts: Sequence[int]):
        normalized = tuple(_as_count(c, "niche count") for c in counts)
        for c in normalized:
            if c < 0:
                raise ValueError(f"niche counts must be non-negative, got {c}")
        object.__setattr__(self, "counts", normalized)

    @property
    def n_total(self) -> int:
        return sum(self.counts)

    @property
    def n_classes(self) -> int:
        """Number of occupied (nonzero) classes."""
        return sum(1 for c in self.counts if c > 0)

    def probabilities(self) -> list[float]:
        """Occupation probabilities of the nonzero classes."""
        total = self.n_total
        if total < 1:
            raise ValueError("empty distribution: no nodes in any niche")
        return [c / total for c in self.counts if c > 0]


@dataclass(frozen=True)
class EfficiencyRecord:
    """Value gained and consumed by one node over an observation window."""

    gained: float
    consumed: float
    window: int = 1

    def __post_init__(self):
        if self.consumed < 0:
            raise ValueError("consumed value must be non-negative")
        if self.window < 1:
            raise ValueError("window must cover at least one tick")


@dataclass(frozen=True)
class CostModel:
    """Operating-cost parameters: unit-time cost k, system size N, niches m.

    m may be fractional (the cost curve is defined for real m in [1, N]).
    """

    k: float
    n_nodes: int
    m: float

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("cost coefficient k must be positive")
        n = _as_count(self.n_nodes, "system size")
        if n < 1:
            raise ValueError("system size must be at least 1")
        if not 1 <= self.m <= n:
            raise ValueError(f"niche count m={self.m} outside [1, {n}]")


@dataclass(frozen=True)
class ModeComparison:
    """Niche counts of the two operating modes and the demand volume d."""

    m_control: float
    m_random: float
    demand: float = 0.0

    def __post_init__(self):
        if self.m_control < 1:
            raise ValueError("control-mode niche count must be >= 1")
        if self.m_random < 2:
            raise ValueError("random-mode niche count must be >= 2 (ln m must be nonzero)")
        if self.demand < 0:
            raise ValueError("demand must be non-negative")


class OperatingCost(NamedTuple):
    management: float  # c1
    matching: float    # c2
    total: float       # c = c1 + c2


class OptimalPartition(NamedTuple):
    niche_count: float   # continuous minimiser, sqrt(N)
    min_cost: float      # 2k * sqrt(N) * log2(sqrt(N))
    entropy_bits: float  # log2(sqrt(N))


class ModeCosts(NamedTuple):
    control: float  # C_a
    random: float   # C_b


def shannon_entropy(dist: NicheDistribution) -> float:
    """Entropy in bits of the niche census; 0*log(0) := 0."""
    probs = dist.probabilities()
    h = -sum(p * math.log2(p) for p in probs)
    return max(h, 0.0)


def max_entropy(n_classes: int) -> float:
    """Upper entropy bound log2(n) for n occupied classes."""
    n = _as_count(n_classes, "class count")
    if n < 1:
        raise ValueError("class count must be at least 1")
    return math.log2(n)


def value_efficiency(record: EfficiencyRecord) -> float:
    """Value-creation efficiency gained/consumed of one node."""
    if record.consumed == 0:
        raise UndefinedEfficiencyError(
            "efficiency undefined for zero consumption; callers map this to "
            "the lowest efficiency class"
        )
    return record.gained / record.consumed


def operating_cost(model: CostModel) -> OperatingCost:
    """Management and matching cost of running N nodes in m niches.

    N/m is a real quotient: the curve matches the continuous derivation,
    so c1 vanishes at m = N and c2 vanishes at m = 1.
    """
    k, n, m = model.k, model.n_nodes, model.m
    per_niche = n / m
    c1 = k * per_niche * math.log2(per_niche)
    c2 = k * m * math.log2(m)
    return OperatingCost(c1, c2, c1 + c2)


def value_benefit(total_gain: float, cost: float) -> float:
    """Net value benefit v = total gains minus operating cost."""
    if cost < 0:
        raise ValueError("cost must be non-negative")
    return total_gain - cost


def optimal_partition(k: float, n_nodes: int) -> OptimalPartition:
    """Cost-minimising niche count, minimum cost and the entropy there.

    The total cost k*((N/m)log2(N/m) + m*log2 m) has a single interior
    extreme point at m = sqrt(N) where management and matching costs are
    equal; the integer minimiser is one of the two roundings of sqrt(N)
    (see ``optimal_niche_count_int``).
    """
    if k <= 0:
        raise ValueError("cost coefficient k must be positive")
    n = _as_count(n_nodes, "system size")
    if n < 1:
        raise ValueError("system size must be at least 1")
    m1 = math.sqrt(n)
    h_b = math.log2(m1)
    c_min = 2.0 * k * m1 * h_b
    return OptimalPartition(m1, c_min, h_b)


def optimal_niche_count_int(k: float, n_nodes: int) -> int:
    """Integer niche count minimising operating cost: best rounding of sqrt(N)."""
    n = _as_count(n_nodes, "system size")
    root = math.sqrt(n)
    lo = max(1, math.floor(root))
    hi = min(n, math.ceil(root))
    if lo == hi:
        return lo
    cost_lo = operating_cost(CostModel(k, n, lo)).total
    cost_hi = operating_cost(CostModel(k, n, hi)).total
    return lo if cost_lo <= cost_hi else hi


def mode_costs(k: float, n_nodes: int, cmp: ModeComparison) -> ModeCosts:
    """Cost of the control-dominated vs random-dominated operating mode.

    Control cost scales with system size (management term only); random-mode
    cost scales with demand volume (matching term times demand d).
    """
    if k <= 0:
        raise ValueError("cost coefficient k must be positive")
    n = _as_count(n_nodes, "system size")
    if cmp.m_control > n:
        raise ValueError(f"control-mode niche count {cmp.m_control} exceeds system size {n}")
    per_niche = n / cmp.m_control
    c_a = k * per_niche * math.log2(per_niche)
    c_b = k * cmp.m_random * math.log2(cmp.m_random) * cmp.demand
    return ModeCosts(c_a, c_b)


def demand_dividing_point(n_nodes: int, m_control: float, m_random: float) -> float:
    """Demand volume d' at which the two modes cost the same.

    Below d' the control-dominated mode is more expensive; above it the
    random-dominated mode is.  Requires m_random >= 2 so ln(m_random) > 0.
    """
    n = _as_count(n_nodes, "system size")
    if n < 1:
        raise ValueError("system size must be at least 1")
    if not 1 <= m_control <= n:
        raise ValueError(f"control-mode niche count {m_control} outside [1, {n}]")
    if m_random < 2:
        raise ValueError("random-mode niche count must be >= 2 (ln m would vanish)")
    return n * (math.log(n) - math.log(m_control)) / (m_control * m_random * math.log(m_random))
