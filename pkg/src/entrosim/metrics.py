"""Per-tick observables and the run-level conservation audit.

Each ecosystem is observed once per tick: population by level, niche
entropy H, cumulative cost C, cumulative gain, and value benefit
V = gain - cost.  Two niche classifiers are available:

* ``efficiency`` (default): agents are binned by value-creation efficiency
  E = gained/consumed over a trailing window, into ceil(sqrt(n)) equal-width
  bins spanning [min E, max E] (left-closed, last bin right-closed).  Agents
  that consumed nothing over the window sit at E = 0, the lowest class.
* ``attribute``: agents are counted per (level, region) cell, a fixed
  15-class partition that is cheap and exactly reproducible from the
  exported census.

The audit closes the capital loop: everything that ever entered circulation
(initial endowments plus released payouts) must equal what is still held
(living capital, hub pools) plus what left it (costs, write-offs).  Child
endowments and combat absorptions are internal transfers and cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .agents import EcosystemState
from .entropy_core import NicheDistribution, shannon_entropy
from .errors import AuditError
from .world import REGION_IDS, World, _REGION_LOOKUP

CAPITAL_TOLERANCE = 1e-6

NICHE_MODES = ("efficiency", "attribute")

CSV_HEADER = (
    "tick", "ecosystem", "n_agents", "n_l1", "n_l2", "n_l3", "entropy",
    "cum_cost", "cum_gain", "value_benefit", "hub_pool",
    "orders_r1", "orders_r2", "orders_r3", "orders_r4", "orders_r5",
    "births", "deaths", "kills",
)

CENSUS_HEADER = ("tick", "ecosystem") + tuple(
    f"l{lvl}_r{rid}" for lvl in (1, 2, 3) for rid in REGION_IDS
)


@dataclass(frozen=True)
class MetricsRecord:
    tick: int
    ecosystem: str
    n_agents: int
    n_by_level: tuple[int, int, int]
    entropy_bits: float
    cum_cost: float
    cum_gain: float
    value_benefit: float
    hub_pool: float
    orders_by_region: tuple[int, int, int, int, int]
    births: int
    deaths: int
    kills: int
    census: tuple[int, ...]  # 15 (level, region) counts, level-major

    def to_csv_row(self) -> list:
        return [self.tick, self.ecosystem, self.n_agents, *self.n_by_level,
                self.entropy_bits, self.cum_cost, self.cum_gain,
                self.value_benefit, self.hub_pool, *self.orders_by_region,
                self.births, self.deaths, self.kills]

    @classmethod
    def from_csv_row(cls, row: list[str], census: tuple[int, ...] = ()) -> "MetricsRecord":
        return cls(
            tick=int(row[0]), ecosystem=row[1], n_agents=int(row[2]),
            n_by_level=(int(row[3]), int(row[4]), int(row[5])),
            entropy_bits=float(row[6]), cum_cost=float(row[7]),
            cum_gain=float(row[8]), value_benefit=float(row[9]),
            hub_pool=float(row[10]),
            orders_by_region=tuple(int(v) for v in row[11:16]),
            births=int(row[16]), deaths=int(row[17]), kills=int(row[18]),
            census=census,
        )


def attribute_census(eco: EcosystemState) -> tuple[int, ...]:
    """(level, region) occupancy counts, level-major over the 15 cells."""
    counts = [0] * 15
    for agent in eco.agents.values():
        region = _REGION_LOOKUP[agent.x][agent.y]
        counts[(agent.level - 1) * 5 + (region - 1)] += 1
    return tuple(counts)


def classify_niches(eco: EcosystemState, mode: str, window: int = 20) -> NicheDistribution | None:
    """Niche census of one ecosystem, or None when it has no living agents."""
    if mode not in NICHE_MODES:
        raise ValueError(f"niche mode must be one of {NICHE_MODES}, got {mode!r}")
    n = len(eco.agents)
    if n == 0:
        return None
    if mode == "attribute":
        return NicheDistribution(attribute_census(eco))
    eff = np.empty(n)
    for i, agent in enumerate(eco.agents.values()):
        if agent.window_consumed > 1e-12:
            eff[i] = agent.window_gained / agent.window_consumed
        else:
            eff[i] = 0.0
    lo = eff.min()
    hi = eff.max()
    if hi == lo:
        return NicheDistribution((n,))
    bins = math.isqrt(n - 1) + 1  # ceil(sqrt(n))
    idx = np.minimum(((eff - lo) * (bins / (hi - lo))).astype(np.int64), bins - 1)
    return NicheDistribution(np.bincount(idx, minlength=bins).tolist())


def snapshot(eco: EcosystemState, world: World, tick: int, mode: str,
             window: int = 20) -> MetricsRecord:
    """Read-only observation of one ecosystem at a tick boundary."""
    dist = classify_niches(eco, mode, window)
    entropy = shannon_entropy(dist) if dist is not None else 0.0
    return MetricsRecord(
        tick=tick,
        ecosystem=eco.id,
        n_agents=len(eco.agents),
        n_by_level=(eco.level_counts[1], eco.level_counts[2], eco.level_counts[3]),
        entropy_bits=entropy,
        cum_cost=eco.cum_cost,
        cum_gain=eco.cum_gain,
        value_benefit=eco.cum_gain - eco.cum_cost,
        hub_pool=eco.hub_pool,
        orders_by_region=tuple(world.live_by_region[r] for r in REGION_IDS),
        births=eco.births,
        deaths=eco.deaths,
        kills=eco.kills,
        census=attribute_census(eco),
    )


@dataclass(frozen=True)
class LedgerReport:
    """All terms of the capital-conservation identity plus the chain audit."""

    initial_endowments: float
    released_payouts: float
    living_capital: float
    hub_pools: float
    cum_cost: float
    writeoffs: float
    child_endowments: float  # informational: internal parent-to-child transfers
    hub_endowments: float    # informational: internal hub-to-new-agent transfers
    delta: float
    chains_generated: int
    chains_completed: int
    chains_voided: int
    chains_live: int

    @property
    def balanced(self) -> bool:
        return abs(self.delta) <= CAPITAL_TOLERANCE

    @property
    def chains_consistent(self) -> bool:
        return self.chains_generated == self.chains_completed + self.chains_voided + self.chains_live

    def as_dict(self) -> dict:
        return {
            "initial_endowments": self.initial_endowments,
            "released_payouts": self.released_payouts,
            "living_capital": self.living_capital,
            "hub_pools": self.hub_pools,
            "cum_cost": self.cum_cost,
            "writeoffs": self.writeoffs,
            "child_endowments": self.child_endowments,
            "hub_endowments": self.hub_endowments,
            "delta": self.delta,
            "balanced": self.balanced,
            "chains_generated": self.chains_generated,
            "chains_completed": self.chains_completed,
            "chains_voided": self.chains_voided,
            "chains_live": self.chains_live,
            "chains_consistent": self.chains_consistent,
        }


def ledger_audit(ecos: dict[str, EcosystemState], world: World) -> LedgerReport:
    """Balance the run-level capital identity and the chain dichotomy.

    initial endowments + released payouts
        = living capital + hub pools + cumulative cost + write-offs

    Combat transfers move capital between the living sets and cancel; child
    endowments move capital from parent to child and cancel (reported for
    reference).  Write-offs cover bankruptcy residuals and payouts released
    to agents that died before their chain completed.
    """
    eco_list = list(ecos.values())
    initial = math.fsum(e.initial_endowment for e in eco_list)
    released = math.fsum(e.cum_gain + e._tick_gain for e in eco_list)
    living = math.fsum(e.living_capital() for e in eco_list)
    hubs = math.fsum(e.hub_pool for e in eco_list)
    cost = math.fsum(e.cum_cost + e._tick_cost for e in eco_list)
    writeoffs = math.fsum(e.writeoff_total + e.estate_total for e in eco_list)
    delta = (initial + released) - (living + hubs + cost + writeoffs)
    return LedgerReport(
        initial_endowments=initial,
        released_payouts=released,
        living_capital=living,
        hub_pools=hubs,
        cum_cost=cost,
        writeoffs=writeoffs,
        child_endowments=math.fsum(e.child_endowment for e in eco_list),
        hub_endowments=math.fsum(e.hub_endowment for e in eco_list),
        delta=delta,
        chains_generated=world.ledger.chains_generated,
        chains_completed=world.ledger.chains_completed,
        chains_voided=world.ledger.chains_voided,
        chains_live=world.live_chain_count(),
    )


def assert_balanced(report: LedgerReport) -> None:
    """Raise AuditError when the identity or the chain dichotomy is broken."""
    if not report.balanced:
        raise AuditError(f"capital ledger imbalance: delta={report.delta!r}")
    if not report.chains_consistent:
        raise AuditError(
            "chain ledger inconsistent: generated="
            f"{report.chains_generated} != completed={report.chains_completed}"
            f" + voided={report.chains_voided} + live={report.chains_live}"
        )
