"""The two operating strategies: control-dominated and random-dominated.

Under the random-dominated strategy every node keeps its own profits and
losses and growth happens only through individual reproduction.  Under the
control-dominated strategy a virtual hub collects a ``hub_tax`` share of
every order payout (the node keeps the rest) and, every ``hub_period``
ticks, spends the pool in two moves:

1. risk sharing: every living agent is topped up toward ``floor_target``
   capital (pro-rata when the pool cannot cover the full need), and
2. directed investment: the remaining budget founds new agents one at a
   time, each assigned the scarcest reachable level, placed next to an
   outstanding order of that level, and endowed like an initial agent.
   Founding a node far from the home region costs the hub a placement
   overhead of punishment_k per cell of distance, so remote expansion is
   expensive management.  Investment stops when outstanding orders no
   longer outnumber the serving workforce (``invest_ratio``).

Anything left stays in the pool for the next boundary.  Costs of operating
agents are always individual; only profits are pooled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError
from .world import GRID_HEIGHT, GRID_WIDTH, REGION_CENTERS, REGION_IDS, _REGION_LOOKUP

STRATEGY_KINDS = ("control", "random")

# Candidate cells for an invested agent around its target order.
_INVEST_OFFSETS = [(dx, dy) for dx in range(-3, 4) for dy in range(-3, 4)
                   if dx * dx + dy * dy <= 9]


@dataclass(frozen=True)
class StrategyConfig:
    kind: str = "random"
    hub_period: int = 10
    hub_tax: float = 0.5
    floor_target: float = 200.0
    floor_fraction: float = 0.5
    invest_trigger: float = 60.0
    invest_ratio: float = 2.0
    invest_expand_ratio: float = 0.3
    invest_grace: int = 40
    invest_endowment: float = 2.0

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ConfigError(f"strategy kind must be one of {STRATEGY_KINDS}, got {self.kind!r}")
        if self.hub_period < 1:
            raise ConfigError("hub_period must be >= 1 tick")
        if not 0.0 <= self.hub_tax <= 1.0:
            raise ConfigError("hub_tax must be within [0, 1]")
        if self.floor_target < 0:
            raise ConfigError("floor_target must be >= 0")
        if not 0.0 <= self.floor_fraction <= 1.0:
            raise ConfigError("floor_fraction must be within [0, 1]")
        if self.invest_trigger < 0:
            raise ConfigError("invest_trigger must be >= 0")
        if self.invest_ratio < 0 or self.invest_expand_ratio < 0:
            raise ConfigError("investment ratios must be >= 0")
        if self.invest_grace < 0:
            raise ConfigError("invest_grace must be >= 0")
        if self.invest_endowment <= 0:
            raise ConfigError("invest_endowment must be positive")


def route_payout(eco, agent, amount: float, cfg: StrategyConfig) -> None:
    """Deliver one released escrow payout according to the strategy.

    Random mode credits the earning agent in full.  Control mode sends the
    hub_tax share to the hub pool and the rest to the agent; payouts of
    agents that died in the meantime go to the hub whole.  Under random
    mode a dead earner's payout is written off as unclaimed estate so the
    capital ledger stays closed.  Either way the full amount counts toward
    the ecosystem's cumulative gain.
    """
    if amount < 0:
        raise ValueError("payout amount must be non-negative")
    eco._tick_gain += amount
    if cfg.kind == "control":
        if agent is None:
            eco.hub_pool += amount
        else:
            kept = amount * (1.0 - cfg.hub_tax)
            eco.hub_pool += amount - kept
            agent.capital += kept
            agent.gained_tick += kept
    elif agent is not None:
        agent.capital += amount
        agent.gained_tick += amount
    else:
        eco.estate_total += amount


def strategy_tick(eco, tick: int, cfg: StrategyConfig, world, params, ids) -> tuple[float, list]:
    """Per-tick strategy action; returns (floor payout total, invested agents).

    Random mode never moves capital.  Control mode acts on hub_period
    boundaries as described in the module docstring.  All flows conserve
    capital: floor payouts and endowments move pool money to agents, and
    only the placement overhead leaves circulation (booked as cost).

    RNG order per invested agent: target order pick, placement cell pick,
    endowment, speed, vision.
    """
    if cfg.kind != "control" or tick % cfg.hub_period != 0:
        return 0.0, []

    distributed = 0.0
    if eco.agents and eco.hub_pool > 0.0:
        needs = [(agent, cfg.floor_target - agent.capital)
                 for agent in eco.agents.values() if agent.capital < cfg.floor_target]
        total_need = sum(need for _, need in needs)
        if total_need > 0.0:
            spend = min(eco.hub_pool, total_need)
            ratio = spend / total_need
            for agent, need in needs:
                share = need * ratio
                agent.capital += share
                agent.gained_tick += share
            eco.hub_pool -= spend
            distributed = spend

    invested = _invest(eco, tick, cfg, world, params, ids)
    return distributed, invested


def _invest(eco, tick: int, cfg: StrategyConfig, world, params, ids) -> list:
    """Found complete service teams in response to demand-level shifts.

    The hub reads the published market trend levels (each region's demand
    base) across its mature territory - regions unlocked at least
    ``invest_grace`` ticks ago.  A region maturing into view opens a
    foothold program of invest_expand_ratio x its base; a base-level surge
    inside mature territory (an emerging-market explosion) opens a program
    of invest_ratio x the surge.  Programs accumulate in a backlog that is
    worked off as the pool affords it: each investment plants one agent per
    stage of the target order's chain (a full relay for multi-stage
    regions), clustered around an outstanding first-stage order, so the
    unit can process chains end to end on its own.
    """
    from .agents import register_agent  # cold path; avoids an import cycle
    from .world import DISTANCE_COST_K, target_order_count

    rng = world.rng
    cap_lo, cap_hi = params.initial_capital
    home_x, home_y = REGION_CENTERS[eco.home_region]
    unlocked = eco.unlocked
    for rid in REGION_IDS:
        if not unlocked[rid] or tick - eco.unlock_tick[rid] < cfg.invest_grace:
            continue
        trend = world.profile.trends[rid]
        base = trend.base
        if trend.burst_tick is not None and tick >= trend.burst_tick:
            base = trend.burst_base
        seen = eco.last_base.get(rid)
        if seen is None:
            if base >= cfg.invest_trigger:
                eco.invest_backlog += cfg.invest_expand_ratio * base
        elif base - seen >= cfg.invest_trigger:
            eco.invest_backlog += cfg.invest_ratio * (base - seen)
        eco.last_base[rid] = base

    invested = []
    while eco.invest_backlog >= 1.0:
        targets = [o for o in world.orders.values()
                   if o.stage_level == 1 and unlocked[_REGION_LOOKUP[o.x][o.y]]]
        if not targets:
            break
        target = targets[int(rng.integers(len(targets)))]
        team_size = 1 + target.remaining_stages
        # Shipping a node out is priced at the destination's distance-cost rate.
        overhead_k = DISTANCE_COST_K[_REGION_LOOKUP[target.x][target.y]]
        # Worst-case budget bound before any draw keeps the RNG stream aligned.
        bound = team_size * (cfg.invest_endowment * cap_hi + overhead_k * (math.hypot(
            abs(target.x - home_x) + 3, abs(target.y - home_y) + 3)))
        if eco.hub_pool < bound:
            break
        cells = []
        for dx, dy in _INVEST_OFFSETS:
            nx, ny = target.x + dx, target.y + dy
            if 0 <= nx < GRID_WIDTH and 0 <= ny < GRID_HEIGHT and unlocked[_REGION_LOOKUP[nx][ny]]:
                cells.append((nx, ny))
        for level in range(1, team_size + 1):
            x, y = cells[int(rng.integers(len(cells)))]
            overhead = overhead_k * math.hypot(x - home_x, y - home_y)
            endowment = cfg.invest_endowment * (cap_lo + float(rng.random()) * (cap_hi - cap_lo))
            speed = int(rng.integers(params.speed_range[0], params.speed_range[1], endpoint=True))
            vision = int(rng.integers(params.vision_range[0], params.vision_range[1], endpoint=True))
            eco.hub_pool -= endowment + overhead
            eco._tick_cost += overhead
            eco.hub_endowment += endowment
            eco.births += 1
            invested.append(register_agent(eco, world, level, x, y, endowment, speed, vision, ids))
        eco.invest_backlog -= team_size
    return invested
