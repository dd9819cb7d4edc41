"""Supply-side agents: perception, movement, claiming, reproduction, combat.

Each agent is a service node of one ecosystem (alpha or beta) with a fixed
processing level 1..3.  Per tick an agent pays an operation cost drawn from
its region's range, walks up to ``speed`` cells toward the nearest matching
order it can see (Chebyshev metric throughout, matching the 8-neighbour
movement), pays a per-cell distance cost, and claims an order that ends up
within the claim radius.  Capital above the reproduction threshold triggers
a birth with inheritance and +/-1 mutation of speed and vision; capital at
or below the death threshold removes the agent.  Agents of different
ecosystems that end a tick adjacent fight: the richer one absorbs the
other's capital.

Ecosystems start confined to their home region and unlock the adjacent
regions (2 and 5) and the emerging region (3) when they pass the configured
population-and-capital thresholds; movement never enters locked regions.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .strategy import StrategyConfig, route_payout
from .world import (
    DISTANCE_COST_K,
    GRID_HEIGHT,
    GRID_WIDTH,
    OP_COST_RANGE,
    REGION_CENTERS,
    REGION_COMPLEXITY,
    REGION_IDS,
    _REGION_LOOKUP,
    ADJACENT_REGIONS,
    EMERGING_REGION,
    Order,
    World,
    spawn_derived_order,
)

_NEIGHBOR_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))

# Candidate child cells per parent vision: all offsets within Euclidean radius.
_PLACEMENT_OFFSETS = {
    v: [(dx, dy) for dx in range(-v, v + 1) for dy in range(-v, v + 1)
        if dx * dx + dy * dy <= v * v]
    for v in range(1, 6)
}


@dataclass(slots=True)
class Agent:
    id: int
    ecosystem: str
    level: int
    x: int
    y: int
    capital: float
    speed: int
    vision: int
    home_region: int
    born_tick: int
    # Per-tick flow accumulators and their rolling-window sums, used for the
    # efficiency-based niche classification.
    gained_tick: float = 0.0
    consumed_tick: float = 0.0
    window_gained: float = 0.0
    window_consumed: float = 0.0
    flow: deque = field(default_factory=deque)


@dataclass(frozen=True)
class SimParams:
    """Agent-level experiment parameters (defaults are the standard setup)."""

    initial_count_alpha: int = 12
    initial_count_beta: int = 14
    initial_capital: tuple[float, float] = (180.0, 220.0)
    speed_range: tuple[int, int] = (1, 5)
    vision_range: tuple[int, int] = (1, 5)
    initial_levels: str = "primary"  # "primary" | "random"
    reproduction_threshold: float = 300.0
    reproduction_punishment_k: float = 3.0
    death_threshold: float = 0.0
    expansion_adjacent: tuple[int, float] = (25, 4000.0)
    expansion_emerging: tuple[int, float] = (125, 15000.0)
    claim_radius: int = 1

    def __post_init__(self):
        if self.initial_count_alpha < 0 or self.initial_count_beta < 0:
            raise ValueError("initial agent counts must be >= 0")
        if self.initial_levels not in ("primary", "random"):
            raise ValueError("initial_levels must be 'primary' or 'random'")
        if self.reproduction_threshold <= 0:
            raise ValueError("reproduction threshold must be positive")
        if self.death_threshold < 0:
            raise ValueError("death threshold must be >= 0")
        if self.claim_radius < 0:
            raise ValueError("claim radius must be >= 0")


@dataclass
class EcosystemState:
    """All mutable state of one ecosystem: agents, unlocks and ledgers."""

    id: str
    strategy: StrategyConfig
    home_region: int
    agents: dict[int, Agent] = field(default_factory=dict)
    unlocked: list[bool] = field(default_factory=list)
    hub_pool: float = 0.0
    cum_cost: float = 0.0
    cum_gain: float = 0.0
    births: int = 0
    deaths: int = 0
    kills: int = 0
    writeoff_total: float = 0.0
    estate_total: float = 0.0
    initial_endowment: float = 0.0
    child_endowment: float = 0.0
    hub_endowment: float = 0.0
    level_counts: list[int] = field(default_factory=lambda: [0, 0, 0, 0])
    unlock_tick: dict[int, int] = field(default_factory=dict)
    first_entry_tick: dict[int, int] = field(default_factory=dict)
    last_base: dict[int, float] = field(default_factory=dict)
    invest_backlog: float = 0.0
    _tick_cost: float = 0.0
    _tick_gain: float = 0.0

    def __post_init__(self):
        if not self.unlocked:
            self.unlocked = [False] * (len(REGION_IDS) + 1)
            self.unlocked[self.home_region] = True
            self.unlock_tick[self.home_region] = 0

    def note_entry(self, region: int, tick: int) -> None:
        if region not in self.first_entry_tick:
            self.first_entry_tick[region] = tick

    def living_capital(self) -> float:
        return math.fsum(a.capital for a in self.agents.values())

    def flush_tick_flows(self) -> None:
        """Fold this tick's cost/gain subtotals into the cumulative ledgers."""
        self.cum_cost += self._tick_cost
        self.cum_gain += self._tick_gain
        self._tick_cost = 0.0
        self._tick_gain = 0.0


def roll_flow_window(agent: Agent, window: int) -> None:
    """Push this tick's (gained, consumed) pair into the rolling window."""
    agent.flow.append((agent.gained_tick, agent.consumed_tick))
    agent.window_gained += agent.gained_tick
    agent.window_consumed += agent.consumed_tick
    if len(agent.flow) > window:
        g0, c0 = agent.flow.popleft()
        agent.window_gained -= g0
        agent.window_consumed -= c0
    agent.gained_tick = 0.0
    agent.consumed_tick = 0.0


def _child_level(eco: EcosystemState, world: World) -> int:
    """Level for a newborn: chase the scarcest stage the ecosystem can reach.

    Among the stage levels offered by unlocked regions, pick the one
    maximising outstanding orders per living same-level agent; ties go to
    the lower level.  With only the home region unlocked this is always 1.
    """
    unlocked_regions = [r for r in REGION_IDS if eco.unlocked[r]]
    max_stage = max(REGION_COMPLEXITY[r] for r in unlocked_regions)
    counts = world.live_by_level_region
    best_level, best_score = 1, -1.0
    for level in range(1, max_stage + 1):
        outstanding = sum(counts[(level, r)] for r in unlocked_regions)
        score = outstanding / (1 + eco.level_counts[level])
        if score > best_score:
            best_level, best_score = level, score
    return best_level


def register_agent(eco: EcosystemState, world: World, level: int, x: int, y: int,
                   capital: float, speed: int, vision: int, ids) -> Agent:
    """Construct an agent and wire it into the ecosystem's indexes."""
    agent = Agent(
        id=next(ids), ecosystem=eco.id, level=level, x=x, y=y, capital=capital,
        speed=speed, vision=vision, home_region=eco.home_region, born_tick=world.tick,
    )
    eco.agents[agent.id] = agent
    eco.level_counts[level] += 1
    eco.note_entry(_REGION_LOOKUP[x][y], world.tick)
    return agent


def spawn_agent(eco: EcosystemState, parent: Agent | None, world: World,
                params: SimParams, ids) -> Agent:
    """Create one agent, either a seeded initial node or a child of ``parent``.

    Initial agents draw position uniformly on the home-region scatter disc
    (rejected until the cell really lies in the home region), capital in the
    initial range and integer speed/vision.  Children inherit the parent's
    speed and vision with a uniform {-1,0,+1} mutation clamped to range, are
    endowed from the parent's capital with a fresh initial-range draw, are
    placed uniformly on an unlocked cell within the parent's vision radius,
    and cost the parent a punishment of k times the placement distance.

    RNG draw order: initial = position (2 uniforms per attempt), capital,
    speed, vision[, level]; child = endowment, mutations (one 2-draw), cell
    choice.
    """
    rng = world.rng
    cap_lo, cap_hi = params.initial_capital
    if parent is None:
        cx, cy = REGION_CENTERS[eco.home_region]
        radius = world.profile.scatter_radius
        x = y = 0
        for _ in range(10_000):
            u = rng.random(2)
            r = radius * math.sqrt(u[0])
            theta = 2.0 * math.pi * u[1]
            x = min(max(int(round(cx + r * math.cos(theta))), 0), GRID_WIDTH - 1)
            y = min(max(int(round(cy + r * math.sin(theta))), 0), GRID_HEIGHT - 1)
            if _REGION_LOOKUP[x][y] == eco.home_region:
                break
        capital = cap_lo + float(rng.random()) * (cap_hi - cap_lo)
        speed = int(rng.integers(params.speed_range[0], params.speed_range[1], endpoint=True))
        vision = int(rng.integers(params.vision_range[0], params.vision_range[1], endpoint=True))
        if params.initial_levels == "random":
            level = int(rng.integers(1, 3, endpoint=True))
        else:
            level = 1
        eco.initial_endowment += capital
    else:
        if parent.capital < params.reproduction_threshold:
            raise ValueError("parent below reproduction threshold")
        level = _child_level(eco, world)
        endowment = cap_lo + float(rng.random()) * (cap_hi - cap_lo)
        mut = rng.integers(-1, 1, size=2, endpoint=True)
        s_lo, s_hi = params.speed_range
        v_lo, v_hi = params.vision_range
        speed = min(max(parent.speed + int(mut[0]), s_lo), s_hi)
        vision = min(max(parent.vision + int(mut[1]), v_lo), v_hi)
        candidates = []
        for dx, dy in _PLACEMENT_OFFSETS[parent.vision]:
            nx, ny = parent.x + dx, parent.y + dy
            if 0 <= nx < GRID_WIDTH and 0 <= ny < GRID_HEIGHT and eco.unlocked[_REGION_LOOKUP[nx][ny]]:
                candidates.append((nx, ny))
        if candidates:
            x, y = candidates[int(rng.integers(len(candidates)))]
        else:
            x, y = parent.x, parent.y
        punishment = params.reproduction_punishment_k * math.hypot(x - parent.x, y - parent.y)
        parent.capital -= endowment + punishment
        parent.consumed_tick += punishment
        eco._tick_cost += punishment
        eco.child_endowment += endowment
        eco.births += 1
        capital = endowment
    return register_agent(eco, world, level, x, y, capital, speed, vision, ids)


def _move_toward(agent: Agent, tx: int, ty: int, eco: EcosystemState,
                 stop_radius: int, tick: int, ignore_locks: bool = False) -> int:
    """Greedy Chebyshev steps toward (tx, ty); returns cells moved.

    Prefers the diagonal step, falls back to the axis steps; every step must
    stay on the grid and (unless ``ignore_locks``) inside unlocked regions.
    Stops once the target is within ``stop_radius``.
    """
    lookup = _REGION_LOOKUP
    unlocked = eco.unlocked
    x, y = agent.x, agent.y
    moves = 0
    while moves < agent.speed:
        dx, dy = tx - x, ty - y
        if max(abs(dx), abs(dy)) <= stop_radius:
            break
        sx = (dx > 0) - (dx < 0)
        sy = (dy > 0) - (dy < 0)
        stepped = False
        for ox, oy in ((sx, sy), (sx, 0), (0, sy)):
            if ox == 0 and oy == 0:
                continue
            nx, ny = x + ox, y + oy
            if not (0 <= nx < GRID_WIDTH and 0 <= ny < GRID_HEIGHT):
                continue
            region = lookup[nx][ny]
            if not ignore_locks and not unlocked[region]:
                continue
            x, y = nx, ny
            moves += 1
            eco.note_entry(region, tick)
            stepped = True
            break
        if not stepped:
            break
    agent.x, agent.y = x, y
    return moves


def _random_walk(agent: Agent, eco: EcosystemState, world: World) -> int:
    """One uniform step among the in-bounds, unlocked neighbours (if any)."""
    lookup = _REGION_LOOKUP
    unlocked = eco.unlocked
    x, y = agent.x, agent.y
    valid = []
    for ox, oy in _NEIGHBOR_OFFSETS:
        nx, ny = x + ox, y + oy
        if 0 <= nx < GRID_WIDTH and 0 <= ny < GRID_HEIGHT and unlocked[lookup[nx][ny]]:
            valid.append((nx, ny))
    if not valid:
        return 0
    agent.x, agent.y = valid[int(world.rng.integers(len(valid)))]
    eco.note_entry(lookup[agent.x][agent.y], world.tick)
    return 1


def _nearest_stocked_region(agent: Agent, world: World, eco: EcosystemState) -> int | None:
    """Closest unlocked region holding outstanding orders of the agent's level.

    Aggregate demand per region is public information (the market's "green
    intensity"); only individual orders require line-of-sight.  Ties go to
    the lower region id.
    """
    counts = world.live_by_level_region
    level = agent.level
    best = None
    best_dist = None
    for rid in REGION_IDS:
        if not eco.unlocked[rid] or counts[(level, rid)] == 0:
            continue
        cx, cy = REGION_CENTERS[rid]
        dist = max(abs(cx - agent.x), abs(cy - agent.y))
        if best_dist is None or dist < best_dist:
            best, best_dist = rid, dist
    return best


def agent_tick(agent: Agent, world: World, eco: EcosystemState,
               params: SimParams, op_cost_u: float) -> Order | None:
    """One action step; returns the order claimed this tick, if any.

    Sequence: pay the operation cost of the current region; head toward the
    nearest visible order of the agent's level; with nothing in sight,
    travel toward the nearest unlocked region that still holds matching
    demand (random-walking once inside it); pay the per-cell distance cost
    at the region's rate; then claim an eligible order within the claim
    radius.  Both costs are priced at the region occupied at the start of
    the tick.
    """
    region = _REGION_LOOKUP[agent.x][agent.y]
    lo, hi = OP_COST_RANGE[region]
    op_cost = lo + op_cost_u * (hi - lo)
    agent.capital -= op_cost
    agent.consumed_tick += op_cost
    eco._tick_cost += op_cost

    claimed = None
    if not eco.unlocked[region]:
        # Defensive: a stranded agent heads home and skips claiming.
        moves = _move_toward(agent, *REGION_CENTERS[eco.home_region], eco,
                             0, world.tick, ignore_locks=True)
    else:
        target = world.find_nearest_order(agent.x, agent.y, agent.level,
                                          agent.vision, eco.unlocked)
        if target is not None:
            moves = _move_toward(agent, target.x, target.y, eco,
                                 params.claim_radius, world.tick)
        else:
            stocked = _nearest_stocked_region(agent, world, eco)
            if stocked is not None and region != stocked:
                moves = _move_toward(agent, *REGION_CENTERS[stocked], eco,
                                     0, world.tick)
            else:
                moves = _random_walk(agent, eco, world)
        claimed = world.find_nearest_order(agent.x, agent.y, agent.level,
                                           params.claim_radius, eco.unlocked)
    if moves:
        dist_cost = DISTANCE_COST_K[region] * moves
        agent.capital -= dist_cost
        agent.consumed_tick += dist_cost
        eco._tick_cost += dist_cost
    return claimed


def process_order(agent: Agent, order: Order, world: World,
                  ecos: dict[str, EcosystemState]) -> bool:
    """Process a claimed order; returns True when the whole chain completed.

    The agent's stage share of the chain value goes into escrow.  A chain
    with stages left spawns the next-stage order at the agent's position;
    completing the final stage releases every escrow entry through the
    owning ecosystem's payout routing.
    """
    if order.stage_level != agent.level:
        raise ValueError(f"agent level {agent.level} cannot process stage {order.stage_level}")
    amount = order.split[order.stage_level - 1] * order.chain_value
    order.escrow.append((agent.id, agent.ecosystem, amount))
    world.remove_order(order)
    if order.remaining_stages > 0:
        spawn_derived_order(order, (agent.x, agent.y), world)
        return False
    world.ledger.chains_completed += 1
    world.ledger.released_value += order.chain_value
    for payee_id, eco_id, payout in order.escrow:
        eco = ecos[eco_id]
        route_payout(eco, eco.agents.get(payee_id), payout, eco.strategy)
    return True


def resolve_combat(ecos: dict[str, EcosystemState], tick: int) -> list[tuple]:
    """Fight every adjacent cross-ecosystem pair; richer agent absorbs poorer.

    Pairs are processed in (victim id, killer id) order as judged from
    pre-combat capitals; an agent killed earlier in the tick no longer
    fights, and capitals are re-compared at processing time (equal capital
    means no kill).  Returns (tick, killer_id, victim_id, amount) events.
    """
    eco_list = list(ecos.values())
    if len(eco_list) != 2:
        raise ValueError("combat expects exactly two ecosystems")
    first, second = eco_list
    cells: dict[tuple[int, int], list[Agent]] = {}
    for agent in second.agents.values():
        cells.setdefault((agent.x, agent.y), []).append(agent)

    pairs = []
    for agent in first.agents.values():
        ax, ay = agent.x, agent.y
        for nx in (ax - 1, ax, ax + 1):
            for ny in (ay - 1, ay, ay + 1):
                for enemy in cells.get((nx, ny), ()):
                    if agent.capital > enemy.capital:
                        pairs.append((enemy.id, agent.id))
                    elif enemy.capital > agent.capital:
                        pairs.append((agent.id, enemy.id))
    pairs.sort()

    by_id = {}
    for eco in eco_list:
        by_id.update(eco.agents)
    events = []
    for victim_id, killer_id in pairs:
        victim = by_id.get(victim_id)
        killer = by_id.get(killer_id)
        if victim is None or killer is None:
            continue
        if victim.id not in ecos[victim.ecosystem].agents:
            continue
        if killer.id not in ecos[killer.ecosystem].agents:
            continue
        if killer.capital > victim.capital:
            pass
        elif victim.capital > killer.capital:
            victim, killer = killer, victim
        else:
            continue
        amount = victim.capital
        killer.capital += amount
        v_eco = ecos[victim.ecosystem]
        del v_eco.agents[victim.id]
        v_eco.level_counts[victim.level] -= 1
        v_eco.deaths += 1
        ecos[killer.ecosystem].kills += 1
        by_id.pop(victim.id, None)
        events.append((tick, killer.id, victim.id, amount))
    return events


def lifecycle(eco: EcosystemState, world: World, params: SimParams, ids) -> list[tuple]:
    """Births then deaths, each pass in agent-id order; returns events.

    Every agent at or above the reproduction threshold spawns one child this
    tick; every agent at or below the death threshold is removed with its
    residual capital written off.
    """
    events = []
    for agent in list(eco.agents.values()):
        if agent.capital >= params.reproduction_threshold:
            child = spawn_agent(eco, agent, world, params, ids)
            events.append(("birth", agent.id, child.id))
    for agent in list(eco.agents.values()):
        if agent.capital <= params.death_threshold:
            del eco.agents[agent.id]
            eco.level_counts[agent.level] -= 1
            eco.writeoff_total += agent.capital
            eco.deaths += 1
            events.append(("death", agent.id, agent.capital))
    return events


def try_expand(eco: EcosystemState, params: SimParams, tick: int) -> list[int]:
    """Unlock adjacent/emerging regions once the thresholds are passed.

    Both gates require population AND total capital (hub pool included);
    unlocking is monotone, regions never re-lock.
    """
    if eco.unlocked[ADJACENT_REGIONS[0]] and eco.unlocked[EMERGING_REGION]:
        return []
    count = len(eco.agents)
    capital = sum(a.capital for a in eco.agents.values()) + eco.hub_pool
    newly: list[int] = []
    if not eco.unlocked[ADJACENT_REGIONS[0]]:
        need_n, need_v = params.expansion_adjacent
        if count >= need_n and capital >= need_v:
            for region in ADJACENT_REGIONS:
                eco.unlocked[region] = True
                eco.unlock_tick[region] = tick
                newly.append(region)
    if not eco.unlocked[EMERGING_REGION]:
        need_n, need_v = params.expansion_emerging
        if count >= need_n and capital >= need_v:
            eco.unlocked[EMERGING_REGION] = True
            eco.unlock_tick[EMERGING_REGION] = tick
            newly.append(EMERGING_REGION)
    return newly
