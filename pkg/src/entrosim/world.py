"""Grid environment: five regions, demand generation and the order food chain.

The arena is a fixed 250x120 cell grid partitioned into five regions by
nearest region center (Euclidean, ties to the lowest region id).  Regions 1
and 4 are the two home markets (single-stage orders), 2 and 5 are adjacent
markets (two-stage orders) and 3 is the emerging market (three-stage orders).

Demand is a standing stock: each tick every region is topped back up to a
target count Y = base + amplitude*sin(2*pi*tick/period) of first-stage
orders.  Processing a multi-stage order spawns the next-stage order at the
processor's position; the payout of every stage is held in escrow until the
final stage completes, and the whole escrow is voided if any stage expires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

GRID_WIDTH = 250
GRID_HEIGHT = 120
REGION_IDS = (1, 2, 3, 4, 5)

REGION_CENTERS = {1: (59, 79), 2: (85, 26), 3: (125, 54), 4: (157, 90), 5: (180, 36)}
DISTANCE_COST_K = {1: 1.0, 2: 1.3, 3: 1.7, 4: 1.0, 5: 1.3}
OP_COST_RANGE = {1: (3.0, 5.0), 2: (3.0, 7.0), 3: (3.0, 9.0), 4: (3.0, 5.0), 5: (3.0, 7.0)}
REGION_COMPLEXITY = {1: 1, 2: 2, 3: 3, 4: 1, 5: 2}

VALUE_RANGE_BY_COMPLEXITY = {1: (10, 30), 2: (50, 80), 3: (70, 100)}
# Stage payout fractions, upstream stage first.
PROFIT_SPLIT_BY_COMPLEXITY = {1: (1.0,), 2: (0.6, 0.4), 3: (0.4, 0.3, 0.3)}

HOME_REGION = {"alpha": 1, "beta": 4}
ADJACENT_REGIONS = (2, 5)
EMERGING_REGION = 3


@dataclass(frozen=True)
class Region:
    id: int
    center: tuple[int, int]
    distance_cost_k: float
    op_cost_range: tuple[float, float]
    complexity: int


REGIONS = {
    rid: Region(rid, REGION_CENTERS[rid], DISTANCE_COST_K[rid],
                OP_COST_RANGE[rid], REGION_COMPLEXITY[rid])
    for rid in REGION_IDS
}


def _build_region_grid() -> np.ndarray:
    xs = np.arange(GRID_WIDTH)[:, None]
    ys = np.arange(GRID_HEIGHT)[None, :]
    dist2 = np.stack([
        (xs - cx) ** 2 + (ys - cy) ** 2 for cx, cy in (REGION_CENTERS[r] for r in REGION_IDS)
    ])
    # argmin returns the first (lowest-id) region on ties
    return (np.argmin(dist2, axis=0) + 1).astype(np.int8)


REGION_GRID = _build_region_grid()
# Nested-list copy for fast scalar lookups on the simulation hot path.
_REGION_LOOKUP: list[list[int]] = REGION_GRID.tolist()


def region_of(pos: tuple[int, int]) -> int:
    """Region id owning a grid cell (nearest center, ties to lowest id)."""
    x, y = pos
    if not (0 <= x < GRID_WIDTH and 0 <= y < GRID_HEIGHT):
        raise ValueError(f"position {pos} outside the {GRID_WIDTH}x{GRID_HEIGHT} grid")
    return _REGION_LOOKUP[x][y]


@dataclass(frozen=True)
class RegionTrend:
    """Target standing-stock curve of one region: base + amplitude*sin."""

    base: float
    amplitude: float
    burst_tick: int | None = None
    burst_base: float | None = None

    def __post_init__(self):
        if self.base < 0:
            raise ConfigError("demand trend base must be >= 0")
        if self.amplitude < 0:
            raise ConfigError("demand trend amplitude must be >= 0")
        if (self.burst_tick is None) != (self.burst_base is None):
            raise ConfigError("burst_tick and burst_base must be set together")


@dataclass(frozen=True)
class DemandProfile:
    """Order-generation model: per-region trends plus global order parameters.

    Orders emerge in fixed cycles: every ``regen_period`` ticks each region's
    first-stage pool is topped back up to its trend target (regen_period=1
    degenerates to a continuously maintained standing stock).  The cycle
    length bounds how much demand value the market feeds per tick and hence
    the population the ecosystems can sustain.

    ``qos_preference`` is carried verbatim from the scenario config and is
    not consulted anywhere; order matching is purely spatial.
    """

    trends: dict[int, RegionTrend]
    period: int = 100
    regen_period: int = 25
    scatter_radius: float = 25.0
    stage_lifetime: int = 50
    volume_cap: int | None = None
    complexity_mode: str = "region"  # "region" | "random"
    qos_preference: object = None

    def __post_init__(self):
        if sorted(self.trends) != list(REGION_IDS):
            raise ConfigError("demand trends must cover exactly regions 1..5")
        if self.period < 1:
            raise ConfigError("demand period must be >= 1 tick")
        if self.regen_period < 1:
            raise ConfigError("demand regen_period must be >= 1 tick")
        if self.scatter_radius <= 0:
            raise ConfigError("scatter radius must be positive")
        if self.stage_lifetime < 1:
            raise ConfigError("stage lifetime must be >= 1 tick")
        if self.volume_cap is not None and self.volume_cap < 0:
            raise ConfigError("volume cap must be >= 0")
        if self.complexity_mode not in ("region", "random"):
            raise ConfigError("complexity_mode must be 'region' or 'random'")


class Order:
    """One live stage of a demand chain.

    A chain has exactly one live order at a time: processing a stage removes
    the order and (for multi-stage chains) spawns the next-stage order.
    ``escrow`` accumulates (agent_id, ecosystem_id, payout) for completed
    stages; it is released in full when the last stage completes and voided
    in full when any stage expires.
    """

    __slots__ = ("id", "chain_id", "region", "stage_level", "remaining_stages",
                 "x", "y", "chain_value", "split", "escrow", "born_tick", "expiry_tick")

    def __init__(self, id, chain_id, region, stage_level, remaining_stages,
                 x, y, chain_value, split, escrow, born_tick, expiry_tick):
        self.id = id
        self.chain_id = chain_id
        self.region = region
        self.stage_level = stage_level
        self.remaining_stages = remaining_stages
        self.x = x
        self.y = y
        self.chain_value = chain_value
        self.split = split
        self.escrow = escrow
        self.born_tick = born_tick
        self.expiry_tick = expiry_tick

    def __repr__(self):
        return (f"Order(id={self.id}, chain={self.chain_id}, region={self.region}, "
                f"stage={self.stage_level}, value={self.chain_value})")


@dataclass
class OrderLedger:
    """Chain-level counters; generated = completed + voided + live always."""

    chains_generated: int = 0
    chains_completed: int = 0
    chains_voided: int = 0
    released_value: float = 0.0
    voided_value: float = 0.0


class World:
    """Mutable environment state: live orders, indexes and the order ledger.

    Single-writer: exactly one simulation loop may mutate a World.  All
    randomness flows through ``self.rng``, the run's only generator.
    """

    def __init__(self, profile: DemandProfile, seed: int):
        self.profile = profile
        self.rng = np.random.default_rng(seed)
        self.seed = seed
        self.tick = 0
        self.width = GRID_WIDTH
        self.height = GRID_HEIGHT
        self.regions = REGIONS
        self.orders: dict[int, Order] = {}
        # Spatial index per agent level: (x, y) -> [orders at that cell]
        self._cells: dict[int, dict[tuple[int, int], list[Order]]] = {1: {}, 2: {}, 3: {}}
        self.stage1_counts = {rid: 0 for rid in REGION_IDS}
        self.live_by_region = {rid: 0 for rid in REGION_IDS}
        self.live_by_level_region = {(lvl, rid): 0 for lvl in (1, 2, 3) for rid in REGION_IDS}
        # First-stage stock that survived the previous regen cycle unclaimed,
        # per region; the market's unserved-demand signal.
        self.stage1_overhang = {rid: 0 for rid in REGION_IDS}
        self._expiry_buckets: dict[int, list[Order]] = {}
        self._order_seq = 0
        self.ledger = OrderLedger()

    # -- index maintenance -------------------------------------------------

    def _add_order(self, order: Order) -> None:
        self.orders[order.id] = order
        cell = (order.x, order.y)
        self._cells[order.stage_level].setdefault(cell, []).append(order)
        self._expiry_buckets.setdefault(order.expiry_tick, []).append(order)
        self.live_by_region[order.region] += 1
        self.live_by_level_region[(order.stage_level, order.region)] += 1
        if order.stage_level == 1:
            self.stage1_counts[order.region] += 1

    def remove_order(self, order: Order) -> None:
        del self.orders[order.id]
        cell = (order.x, order.y)
        bucket = self._cells[order.stage_level][cell]
        bucket.remove(order)
        if not bucket:
            del self._cells[order.stage_level][cell]
        self.live_by_region[order.region] -= 1
        self.live_by_level_region[(order.stage_level, order.region)] -= 1
        if order.stage_level == 1:
            self.stage1_counts[order.region] -= 1

    def live_chain_count(self) -> int:
        return len(self.orders)

    # -- spatial queries ---------------------------------------------------

    def _ring_cells(self, x: int, y: int, r: int):
        if r == 0:
            yield (x, y)
            return
        for cx in range(x - r, x + r + 1):
            yield (cx, y - r)
            yield (cx, y + r)
        for cy in range(y - r + 1, y + r):
            yield (x - r, cy)
            yield (x + r, cy)

    def find_nearest_order(self, x: int, y: int, level: int, radius: int,
                           unlocked: list[bool]) -> Order | None:
        """Nearest live stage-``level`` order within Chebyshev ``radius``.

        Only orders inside unlocked regions are eligible; ties within a ring
        resolve to the lowest order id.
        """
        cells = self._cells[level]
        lookup = _REGION_LOOKUP
        width, height = self.width, self.height
        for r in range(radius + 1):
            best = None
            for cx, cy in self._ring_cells(x, y, r):
                if not (0 <= cx < width and 0 <= cy < height):
                    continue
                found = cells.get((cx, cy))
                if found and unlocked[lookup[cx][cy]]:
                    for order in found:
                        if best is None or order.id < best.id:
                            best = order
            if best is not None:
                return best
        return None


def build_world(profile: DemandProfile, seed: int) -> World:
    """Empty world at tick 0 with a freshly seeded deterministic generator."""
    if not isinstance(profile, DemandProfile):
        raise ConfigError("profile must be a DemandProfile")
    return World(profile, seed)


def target_order_count(region_id: int, tick: int, profile: DemandProfile) -> int:
    """Target standing stock of first-stage orders for one region at a tick."""
    if tick < 0:
        raise ValueError("tick must be >= 0")
    trend = profile.trends[region_id]
    base = trend.base
    if trend.burst_tick is not None and tick >= trend.burst_tick:
        base = trend.burst_base
    y = base + trend.amplitude * math.sin(2.0 * math.pi * tick / profile.period)
    return max(0, int(round(y)))


def replenish_orders(world: World, profile: DemandProfile) -> list[Order]:
    """Top every region's first-stage order pool back up to its target.

    New orders emerge only on regeneration ticks (tick divisible by
    regen_period); other ticks are no-ops.  RNG consumption order: regions
    1..5; per region one batch of position draws (two uniforms per order),
    then complexity draws when complexity_mode="random", then one batch of
    integer value draws.
    """
    rng = world.rng
    tick = world.tick
    created: list[Order] = []
    if tick % profile.regen_period != 0:
        return created
    for rid in REGION_IDS:
        world.stage1_overhang[rid] = world.stage1_counts[rid]
        deficit = target_order_count(rid, tick, profile) - world.stage1_counts[rid]
        if profile.volume_cap is not None:
            budget = profile.volume_cap - world.ledger.chains_generated - len(created)
            deficit = min(deficit, budget)
        if deficit <= 0:
            continue
        cx, cy = REGION_CENTERS[rid]
        pos_u = rng.random((deficit, 2))
        if profile.complexity_mode == "random":
            complexities = rng.integers(1, 3, size=deficit, endpoint=True)
        else:
            complexities = np.full(deficit, REGION_COMPLEXITY[rid])
        lows = np.array([VALUE_RANGE_BY_COMPLEXITY[int(c)][0] for c in complexities])
        highs = np.array([VALUE_RANGE_BY_COMPLEXITY[int(c)][1] for c in complexities])
        values = rng.integers(lows, highs, endpoint=True)
        for i in range(deficit):
            radius = profile.scatter_radius * math.sqrt(pos_u[i, 0])
            theta = 2.0 * math.pi * pos_u[i, 1]
            x = min(max(int(round(cx + radius * math.cos(theta))), 0), GRID_WIDTH - 1)
            y = min(max(int(round(cy + radius * math.sin(theta))), 0), GRID_HEIGHT - 1)
            complexity = int(complexities[i])
            world._order_seq += 1
            order = Order(
                id=world._order_seq, chain_id=world._order_seq, region=rid,
                stage_level=1, remaining_stages=complexity - 1, x=x, y=y,
                chain_value=float(values[i]),
                split=PROFIT_SPLIT_BY_COMPLEXITY[complexity], escrow=[],
                born_tick=tick, expiry_tick=tick + profile.stage_lifetime,
            )
            world._add_order(order)
            created.append(order)
        world.ledger.chains_generated += deficit
    return created


def spawn_derived_order(parent: Order, pos: tuple[int, int], world: World) -> Order:
    """Next-stage order of a chain, placed where the last stage was processed.

    The parent must already have been removed from the live set by the
    caller; the derived order inherits the chain identity and escrow and
    gets a fresh expiry window.
    """
    if parent.remaining_stages < 1:
        raise ValueError("cannot derive an order from a chain's final stage")
    x, y = pos
    world._order_seq += 1
    order = Order(
        id=world._order_seq, chain_id=parent.chain_id, region=region_of(pos),
        stage_level=parent.stage_level + 1,
        remaining_stages=parent.remaining_stages - 1, x=x, y=y,
        chain_value=parent.chain_value, split=parent.split, escrow=parent.escrow,
        born_tick=world.tick, expiry_tick=world.tick + world.profile.stage_lifetime,
    )
    world._add_order(order)
    return order


def step_order_lifecycle(world: World) -> tuple[list[int], float]:
    """Remove orders whose stage lifetime ran out, voiding their escrow.

    Returns the expired chain ids and the total escrowed value voided (agents
    holding provisional payouts on those chains are never paid).
    """
    expired_chains: list[int] = []
    voided = 0.0
    for t in [t for t in world._expiry_buckets if t <= world.tick]:
        for order in world._expiry_buckets.pop(t):
            if world.orders.get(order.id) is not order:
                continue  # claimed before expiring
            world.remove_order(order)
            expired_chains.append(order.chain_id)
            voided += sum(amount for _, _, amount in order.escrow)
            world.ledger.chains_voided += 1
    world.ledger.voided_value += voided
    return expired_chains, voided
