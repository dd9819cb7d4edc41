"""Deterministic simulation loop, file export and multi-seed sweeps.

A run executes a fixed phase order per tick:

1. top order pools up to their targets
2. all living agents of both ecosystems act, interleaved in a seeded
   shuffle (move, pay costs, claim and process orders)
3. combat between adjacent cross-ecosystem agents
4. order expiry (escrow voiding)
5. strategy action (hub redistribution) per ecosystem
6. births and deaths per ecosystem
7. region-expansion gates per ecosystem
8. metrics snapshot of both ecosystems, then the efficiency windows roll

Every random draw flows through one seeded generator in a fixed order
(world replenishment; per-tick shuffle; one batched operation-cost draw;
per-agent walk draws in shuffled order; birth draws in id order), so a
(config, seed) pair always reproduces byte-identical outputs.

The single-run entry point is :func:`run`; :func:`sweep` repeats a scenario
over a seed list (optionally in parallel processes) and aggregates how often
each qualitative market conclusion held.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import agents as agents_mod
from . import metrics as metrics_mod
from . import world as world_mod
from .config import ECOSYSTEMS, ScenarioConfig, from_dict
from .strategy import strategy_tick
from .metrics import (
    CENSUS_HEADER,
    CSV_HEADER,
    LedgerReport,
    MetricsRecord,
    assert_balanced,
    ledger_audit,
    snapshot,
)
from .world import HOME_REGION, REGION_IDS, World, build_world

VARIANCE_SAMPLE_EVERY = 10
ORDERING_WINDOW = 100  # trailing ticks over which the entropy ordering is judged


@dataclass
class RunOutput:
    """Everything a finished run produced, ready for export or aggregation."""

    config: ScenarioConfig
    records: list[MetricsRecord]
    events: list[tuple]
    ledger: LedgerReport
    summary: dict
    capital_variance: dict[str, list[tuple[int, float]]]
    valid: bool


def _setup_ecosystems(config: ScenarioConfig, world: World, ids) -> dict[str, agents_mod.EcosystemState]:
    ecos = {}
    for eco_id in ECOSYSTEMS:
        ecos[eco_id] = agents_mod.EcosystemState(
            id=eco_id, strategy=config.strategies[eco_id], home_region=HOME_REGION[eco_id],
        )
    counts = {"alpha": config.sim_params.initial_count_alpha,
              "beta": config.sim_params.initial_count_beta}
    for eco_id in ECOSYSTEMS:
        for _ in range(counts[eco_id]):
            agents_mod.spawn_agent(ecos[eco_id], None, world, config.sim_params, ids)
    return ecos


def run(config: ScenarioConfig, id_start: int = 0, strategy_enabled: bool = True) -> RunOutput:
    """Execute one scenario; deterministic in (config, id_start).

    ``strategy_enabled=False`` skips the strategy phase entirely (used to
    verify that the random strategy is a no-op on capital flows).
    """
    world = build_world(config.demand, config.seed)
    ids = itertools.count(id_start)
    ecos = _setup_ecosystems(config, world, ids)
    eco_list = [ecos[e] for e in ECOSYSTEMS]
    params = config.sim_params
    window = config.efficiency_window
    collect_events = config.export_events
    rng = world.rng

    records: list[MetricsRecord] = []
    events: list[tuple] = []
    variance: dict[str, list[tuple[int, float]]] = {e: [] for e in ECOSYSTEMS}

    for tick in range(config.ticks):
        world.tick = tick
        world_mod.replenish_orders(world, config.demand)

        acting = sorted(
            (a for eco in eco_list for a in eco.agents.values()),
            key=lambda a: a.id,
        )
        n = len(acting)
        if n:
            perm = rng.permutation(n).tolist()
            op_u = rng.random(n).tolist()
            for i in range(n):
                agent = acting[perm[i]]
                eco = ecos[agent.ecosystem]
                claimed = agents_mod.agent_tick(agent, world, eco, params, op_u[i])
                if claimed is not None:
                    agents_mod.process_order(agent, claimed, world, ecos)
                    if collect_events:
                        events.append((tick, "claim", agent.id, agent.ecosystem,
                                       f"order={claimed.id};chain={claimed.chain_id}"))

        for kill_tick, killer_id, victim_id, amount in agents_mod.resolve_combat(ecos, tick):
            if collect_events:
                events.append((kill_tick, "kill", killer_id, _eco_of_agent(ecos, killer_id),
                               f"victim={victim_id};loot={amount!r}"))

        world_mod.step_order_lifecycle(world)

        if strategy_enabled:
            for eco in eco_list:
                _, invested = strategy_tick(eco, tick, eco.strategy, world, params, ids)
                if collect_events:
                    for agent in invested:
                        events.append((tick, "invest", agent.id, eco.id,
                                       f"level={agent.level};pos=({agent.x},{agent.y})"))

        for eco in eco_list:
            for kind, agent_id, detail in agents_mod.lifecycle(eco, world, params, ids):
                if collect_events:
                    events.append((tick, kind, agent_id, eco.id, f"{detail!r}"))

        for eco in eco_list:
            for region in agents_mod.try_expand(eco, params, tick):
                if collect_events:
                    events.append((tick, "expand", -1, eco.id, f"region={region}"))

        for eco in eco_list:
            eco.flush_tick_flows()
            records.append(snapshot(eco, world, tick, config.niche_mode, window))
            if tick % VARIANCE_SAMPLE_EVERY == 0:
                variance[eco.id].append((tick, _capital_variance(eco)))
            for agent in eco.agents.values():
                agents_mod.roll_flow_window(agent, window)

    report = ledger_audit(ecos, world)
    valid = report.balanced and report.chains_consistent
    summary = _build_summary(config, records, ecos, report, variance, valid)
    return RunOutput(config=config, records=records, events=events, ledger=report,
                     summary=summary, capital_variance=variance, valid=valid)


def _eco_of_agent(ecos, agent_id: int) -> str:
    for eco in ecos.values():
        if agent_id in eco.agents:
            return eco.id
    return "?"


def _capital_variance(eco) -> float:
    n = len(eco.agents)
    if n < 2:
        return 0.0
    caps = [a.capital for a in eco.agents.values()]
    mean = sum(caps) / n
    return sum((c - mean) ** 2 for c in caps) / n


def _build_summary(config, records, ecos, report: LedgerReport, variance, valid) -> dict:
    by_eco = {e: [r for r in records if r.ecosystem == e] for e in ECOSYSTEMS}
    final = {}
    for eco_id, rows in by_eco.items():
        last = rows[-1]
        final[eco_id] = {
            "n_agents": last.n_agents,
            "entropy": last.entropy_bits,
            "cum_cost": last.cum_cost,
            "cum_gain": last.cum_gain,
            "value_benefit": last.value_benefit,
            "hub_pool": last.hub_pool,
        }

    w = min(ORDERING_WINDOW, config.ticks)
    tail_a = by_eco["alpha"][-w:]
    tail_b = by_eco["beta"][-w:]
    h_ordering = all(rb.entropy_bits >= ra.entropy_bits for ra, rb in zip(tail_a, tail_b))

    burst_ticks = [t.burst_tick for t in config.demand.trends.values() if t.burst_tick is not None]
    burst_tick = min(burst_ticks) if burst_ticks else None
    crossover_tick = None
    if burst_tick is not None:
        for ra, rb in zip(by_eco["alpha"], by_eco["beta"]):
            if ra.tick > burst_tick and rb.cum_cost > ra.cum_cost:
                crossover_tick = ra.tick
                break

    proximity = {e: _entropy_distance_from_optimum(rows[-w:]) for e, rows in by_eco.items()}
    v_alpha = final["alpha"]["value_benefit"]
    v_beta = final["beta"]["value_benefit"]
    winner, loser = ("alpha", "beta") if v_alpha >= v_beta else ("beta", "alpha")

    expansion = {}
    confinement_ok = True
    for eco_id, eco in ecos.items():
        entries = {str(r): eco.first_entry_tick.get(r) for r in REGION_IDS}
        unlocks = {str(r): eco.unlock_tick.get(r) for r in REGION_IDS}
        expansion[eco_id] = {"first_entry_ticks": entries, "unlock_ticks": unlocks}
        for region in REGION_IDS:
            entered = eco.first_entry_tick.get(region)
            unlocked_at = eco.unlock_tick.get(region)
            if entered is not None and (unlocked_at is None or entered < unlocked_at):
                confinement_ok = False

    return {
        "seed": config.seed,
        "ticks": config.ticks,
        "niche_mode": config.niche_mode,
        "valid": valid,
        "final": final,
        "orderings": {
            "v_beta_gt_alpha_final": v_beta > v_alpha,
            "v_alpha_gt_beta_final": v_alpha > v_beta,
            "h_beta_ge_alpha_trailing": h_ordering,
            "h_ordering_window": w,
            "burst_tick": burst_tick,
            "c_beta_exceeds_alpha_tick": crossover_tick,
            "winner_entropy_distance": proximity[winner],
            "loser_entropy_distance": proximity[loser],
            "winner_closer_to_optimum": proximity[winner] <= proximity[loser],
        },
        "expansion": expansion,
        "confinement_ok": confinement_ok,
        "ledger": report.as_dict(),
        "capital_variance_sampled": {e: rows for e, rows in variance.items()},
        "config": config.raw,
    }


def _entropy_distance_from_optimum(rows) -> float:
    """Mean |H - log2 sqrt(n)| over snapshots with living agents."""
    dists = [abs(r.entropy_bits - math.log2(math.sqrt(r.n_agents)))
             for r in rows if r.n_agents > 0]
    return sum(dists) / len(dists) if dists else math.inf


# -- export -----------------------------------------------------------------


def export(output: RunOutput, out_dir: str | Path) -> dict[str, Path]:
    """Write metrics.csv, census.csv, summary.json (and events.csv if kept)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}

    metrics_path = out / "metrics.csv"
    with metrics_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record in output.records:
            writer.writerow(record.to_csv_row())
    paths["metrics"] = metrics_path

    census_path = out / "census.csv"
    with census_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CENSUS_HEADER)
        for record in output.records:
            writer.writerow([record.tick, record.ecosystem, *record.census])
    paths["census"] = census_path

    if output.events:
        events_path = out / "events.csv"
        with events_path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("tick", "event", "agent_id", "ecosystem", "detail"))
            writer.writerows(output.events)
        paths["events"] = events_path

    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(output.summary, indent=2, sort_keys=True) + "\n")
    paths["summary"] = summary_path
    return paths


def read_metrics_csv(path: str | Path) -> list[MetricsRecord]:
    """Parse an exported metrics.csv back into records (census left empty)."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected metrics.csv header: {header}")
        return [MetricsRecord.from_csv_row(row) for row in reader]


def read_census_csv(path: str | Path) -> list[tuple[int, str, tuple[int, ...]]]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CENSUS_HEADER:
            raise ValueError(f"unexpected census.csv header: {header}")
        return [(int(r[0]), r[1], tuple(int(v) for v in r[2:])) for r in reader]


# -- sweeps -------------------------------------------------------------------


def _sweep_worker(payload: tuple) -> tuple[int, dict]:
    tree, seed, out_dir = payload
    config = from_dict(tree).with_overrides(seed=seed)
    output = run(config)
    if out_dir is not None:
        export(output, Path(out_dir) / f"seed_{seed}")
    return seed, output.summary


def sweep(config: ScenarioConfig, seeds: list[int], jobs: int = 1,
          out_dir: str | Path | None = None) -> dict:
    """Run a scenario over many seeds and aggregate the market conclusions.

    Seeds run independently (in parallel processes when jobs > 1) and the
    report is assembled in seed order, so the result does not depend on the
    execution mode.  Invalid runs (failed audit) are excluded from the
    fractions and flagged.
    """
    if not seeds:
        raise ValueError("sweep needs at least one seed")
    out_str = str(out_dir) if out_dir is not None else None
    payloads = [(config.raw, seed, out_str) for seed in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(_sweep_worker, payloads))
    else:
        results = dict(map(_sweep_worker, payloads))

    per_seed = []
    for seed in seeds:
        summary = results[seed]
        orderings = summary["orderings"]
        per_seed.append({
            "seed": seed,
            "valid": summary["valid"],
            "final": summary["final"],
            "confinement_ok": summary["confinement_ok"],
            "random_wins_mature": (orderings["v_beta_gt_alpha_final"]
                                   and orderings["h_beta_ge_alpha_trailing"]),
            "control_wins_emerging": (orderings["c_beta_exceeds_alpha_tick"] is not None
                                      and orderings["v_alpha_gt_beta_final"]),
            "optimal_entropy_proximity": orderings["winner_closer_to_optimum"],
            "orderings": orderings,
        })

    valid_rows = [row for row in per_seed if row["valid"]]
    n_valid = len(valid_rows)

    def fraction(key: str) -> float | None:
        if not n_valid:
            return None
        return sum(1 for row in valid_rows if row[key]) / n_valid

    report = {
        "seeds": list(seeds),
        "n_valid": n_valid,
        "invalid_seeds": [row["seed"] for row in per_seed if not row["valid"]],
        "fractions": {
            "random_wins_mature": fraction("random_wins_mature"),
            "control_wins_emerging": fraction("control_wins_emerging"),
            "optimal_entropy_proximity": fraction("optimal_entropy_proximity"),
            "confinement_ok": fraction("confinement_ok"),
        },
        "per_seed": per_seed,
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report
