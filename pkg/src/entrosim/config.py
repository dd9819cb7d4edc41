"""Scenario configuration: presets, JSON loading, validation and merging.

A scenario is a plain key-value tree (JSON on disk).  Every field has a
default equal to the standard experiment setup; a config file only lists
what it overrides and is deep-merged over its preset.  The two built-in
presets are:

* ``case1`` — stable market: every region oscillates around its base demand.
* ``case2`` — emerging-market burst: identical to case1 until tick 280, when
  region 3's demand base jumps to 350.

``entrosim/schema/scenario.schema.json`` documents the full tree.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from .agents import SimParams
from .errors import ConfigError
from .strategy import STRATEGY_KINDS, StrategyConfig
from .world import REGION_IDS, DemandProfile, RegionTrend

PRESETS = ("case1", "case2")

ECOSYSTEMS = ("alpha", "beta")

_CASE1: dict = {
    "ticks": 400,
    "seed": 42,
    "niche_mode": "efficiency",
    "efficiency_window": 20,
    "demand": {
        "period": 100,
        "regen_period": 25,
        "scatter_radius": 25.0,
        "stage_lifetime": 50,
        "volume_cap": None,
        "complexity_mode": "region",
        "qos_preference": None,
        "trends": {
            "1": {"base": 200.0, "amplitude": 25.0, "burst_tick": None, "burst_base": None},
            "2": {"base": 225.0, "amplitude": 30.0, "burst_tick": None, "burst_base": None},
            "3": {"base": 225.0, "amplitude": 30.0, "burst_tick": None, "burst_base": None},
            "4": {"base": 200.0, "amplitude": 25.0, "burst_tick": None, "burst_base": None},
            "5": {"base": 225.0, "amplitude": 30.0, "burst_tick": None, "burst_base": None},
        },
    },
    "agents": {
        "initial_count": {"alpha": 12, "beta": 14},
        "initial_capital": [180.0, 220.0],
        "speed_range": [1, 5],
        "vision_range": [1, 5],
        "initial_levels": "primary",
        "reproduction_threshold": 300.0,
        "reproduction_punishment_k": 3.0,
        "death_threshold": 0.0,
        "expansion": {
            "adjacent": {"count": 25, "capital": 4000.0},
            "emerging": {"count": 125, "capital": 15000.0},
        },
        "claim_radius": 1,
    },
    "strategies": {
        "alpha": {"kind": "control", "hub_period": 10, "hub_tax": 0.5,
                  "floor_target": 200.0, "invest_trigger": 60.0, "invest_ratio": 2.0,
                  "invest_expand_ratio": 0.3, "invest_grace": 40, "invest_endowment": 2.0},
        "beta": {"kind": "random", "hub_period": 10, "hub_tax": 0.5,
                 "floor_target": 200.0, "invest_trigger": 60.0, "invest_ratio": 2.0,
                 "invest_expand_ratio": 0.3, "invest_grace": 40, "invest_endowment": 2.0},
    },
    "export": {"events": False},
}


def _case2() -> dict:
    cfg = copy.deepcopy(_CASE1)
    cfg["demand"]["trends"]["3"].update({"burst_tick": 280, "burst_base": 350.0})
    return cfg


def preset_dict(name: str) -> dict:
    if name == "case1":
        return copy.deepcopy(_CASE1)
    if name == "case2":
        return _case2()
    raise ConfigError(f"unknown preset {name!r}; expected one of {PRESETS}")


def deep_merge(base: dict, override: dict, path: str = "") -> dict:
    """Recursively merge ``override`` into a copy of ``base``."""
    merged = dict(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"{where}: unknown configuration key")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}: expected an object")
            merged[key] = deep_merge(base[key], value, where)
        else:
            merged[key] = value
    return merged


def _expect(cond: bool, where: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{where}: {message}")


def _check_number(value, where: str, minimum=None) -> float:
    _expect(isinstance(value, (int, float)) and not isinstance(value, bool),
            where, f"expected a number, got {value!r}")
    if minimum is not None:
        _expect(value >= minimum, where, f"must be >= {minimum}")
    return float(value)


def _check_int(value, where: str, minimum=None) -> int:
    _expect(isinstance(value, int) and not isinstance(value, bool),
            where, f"expected an integer, got {value!r}")
    if minimum is not None:
        _expect(value >= minimum, where, f"must be >= {minimum}")
    return value


def _check_pair(value, where: str, kind) -> tuple:
    _expect(isinstance(value, (list, tuple)) and len(value) == 2,
            where, "expected a [low, high] pair")
    lo, hi = (kind(value[0], f"{where}[0]"), kind(value[1], f"{where}[1]"))
    _expect(lo <= hi, where, "low bound exceeds high bound")
    return (lo, hi)


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated, fully-resolved scenario ready to run."""

    ticks: int
    seed: int
    niche_mode: str
    efficiency_window: int
    demand: DemandProfile
    sim_params: SimParams
    strategies: dict[str, StrategyConfig]
    export_events: bool
    raw: dict = field(repr=False)

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        """New config with top-level scalar fields replaced (seed, ticks, ...)."""
        tree = copy.deepcopy(self.raw)
        for key, value in kwargs.items():
            if value is None:
                continue
            if key == "events":
                tree["export"]["events"] = value
            else:
                tree[key] = value
        return from_dict(tree)


def from_dict(tree: dict) -> ScenarioConfig:
    """Validate a full configuration tree and build the typed config."""
    ticks = _check_int(tree["ticks"], "ticks", minimum=1)
    seed = _check_int(tree["seed"], "seed", minimum=0)
    niche_mode = tree["niche_mode"]
    _expect(niche_mode in ("efficiency", "attribute"), "niche_mode",
            "must be 'efficiency' or 'attribute'")
    window = _check_int(tree["efficiency_window"], "efficiency_window", minimum=1)

    d = tree["demand"]
    trends = {}
    _expect(isinstance(d["trends"], dict), "demand.trends", "expected an object")
    _expect(sorted(d["trends"]) == [str(r) for r in REGION_IDS],
            "demand.trends", "must define regions '1'..'5'")
    for rid_str, spec in d["trends"].items():
        where = f"demand.trends.{rid_str}"
        base = _check_number(spec["base"], f"{where}.base", minimum=0)
        amplitude = _check_number(spec["amplitude"], f"{where}.amplitude", minimum=0)
        burst_tick = spec.get("burst_tick")
        burst_base = spec.get("burst_base")
        if burst_tick is not None:
            burst_tick = _check_int(burst_tick, f"{where}.burst_tick", minimum=0)
        if burst_base is not None:
            burst_base = _check_number(burst_base, f"{where}.burst_base", minimum=0)
        try:
            trends[int(rid_str)] = RegionTrend(base, amplitude, burst_tick, burst_base)
        except ConfigError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    volume_cap = d["volume_cap"]
    if volume_cap is not None:
        volume_cap = _check_int(volume_cap, "demand.volume_cap", minimum=0)
    try:
        demand = DemandProfile(
            trends=trends,
            period=_check_int(d["period"], "demand.period", minimum=1),
            regen_period=_check_int(d["regen_period"], "demand.regen_period", minimum=1),
            scatter_radius=_check_number(d["scatter_radius"], "demand.scatter_radius"),
            stage_lifetime=_check_int(d["stage_lifetime"], "demand.stage_lifetime", minimum=1),
            volume_cap=volume_cap,
            complexity_mode=d["complexity_mode"],
            qos_preference=d["qos_preference"],
        )
    except ConfigError as exc:
        raise ConfigError(f"demand: {exc}") from None

    a = tree["agents"]
    counts = a["initial_count"]
    _expect(isinstance(counts, dict) and sorted(counts) == ["alpha", "beta"],
            "agents.initial_count", "must define 'alpha' and 'beta'")
    exp = a["expansion"]
    for gate in ("adjacent", "emerging"):
        _expect(gate in exp, f"agents.expansion.{gate}", "missing")
    try:
        sim_params = SimParams(
            initial_count_alpha=_check_int(counts["alpha"], "agents.initial_count.alpha", 0),
            initial_count_beta=_check_int(counts["beta"], "agents.initial_count.beta", 0),
            initial_capital=_check_pair(a["initial_capital"], "agents.initial_capital", _check_number),
            speed_range=_check_pair(a["speed_range"], "agents.speed_range", _check_int),
            vision_range=_check_pair(a["vision_range"], "agents.vision_range", _check_int),
            initial_levels=a["initial_levels"],
            reproduction_threshold=_check_number(a["reproduction_threshold"],
                                                 "agents.reproduction_threshold", 0),
            reproduction_punishment_k=_check_number(a["reproduction_punishment_k"],
                                                    "agents.reproduction_punishment_k", 0),
            death_threshold=_check_number(a["death_threshold"], "agents.death_threshold", 0),
            expansion_adjacent=(
                _check_int(exp["adjacent"]["count"], "agents.expansion.adjacent.count", 0),
                _check_number(exp["adjacent"]["capital"], "agents.expansion.adjacent.capital", 0),
            ),
            expansion_emerging=(
                _check_int(exp["emerging"]["count"], "agents.expansion.emerging.count", 0),
                _check_number(exp["emerging"]["capital"], "agents.expansion.emerging.capital", 0),
            ),
            claim_radius=_check_int(a["claim_radius"], "agents.claim_radius", 0),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"agents: {exc}") from None
    _expect(sim_params.speed_range[0] >= 1, "agents.speed_range", "low bound must be >= 1")
    _expect(sim_params.vision_range[0] >= 1, "agents.vision_range", "low bound must be >= 1")
    _expect(sim_params.vision_range[1] <= 5, "agents.vision_range", "high bound must be <= 5")

    s = tree["strategies"]
    _expect(isinstance(s, dict) and sorted(s) == list(ECOSYSTEMS),
            "strategies", "must define 'alpha' and 'beta'")
    strategies = {}
    for eco in ECOSYSTEMS:
        spec = s[eco]
        where = f"strategies.{eco}"
        _expect(spec.get("kind") in STRATEGY_KINDS, f"{where}.kind",
                f"must be one of {STRATEGY_KINDS}")
        try:
            strategies[eco] = StrategyConfig(
                kind=spec["kind"],
                hub_period=_check_int(spec["hub_period"], f"{where}.hub_period", minimum=1),
                hub_tax=_check_number(spec["hub_tax"], f"{where}.hub_tax", minimum=0),
                floor_target=_check_number(spec["floor_target"], f"{where}.floor_target", minimum=0),
                invest_trigger=_check_number(spec["invest_trigger"], f"{where}.invest_trigger", minimum=0),
                invest_expand_ratio=_check_number(spec["invest_expand_ratio"],
                                                  f"{where}.invest_expand_ratio", minimum=0),
                invest_grace=_check_int(spec["invest_grace"], f"{where}.invest_grace", minimum=0),
                invest_endowment=_check_number(spec["invest_endowment"],
                                               f"{where}.invest_endowment", minimum=0.0),
                invest_ratio=_check_number(spec["invest_ratio"], f"{where}.invest_ratio", minimum=0),
            )
        except ConfigError as exc:
            raise ConfigError(f"{where}: {exc}") from None

    events = tree["export"]["events"]
    _expect(isinstance(events, bool), "export.events", "expected true/false")

    return ScenarioConfig(
        ticks=ticks, seed=seed, niche_mode=niche_mode, efficiency_window=window,
        demand=demand, sim_params=sim_params, strategies=strategies,
        export_events=events, raw=copy.deepcopy(tree),
    )


def load_scenario(source: str | Path) -> ScenarioConfig:
    """Load a preset by name or a JSON file deep-merged over its preset.

    A file may name its base with a top-level ``"preset"`` key (default
    ``case1``); every other key overrides the preset's value.
    """
    if isinstance(source, str) and source in PRESETS:
        return from_dict(preset_dict(source))
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"scenario source {source!r} is neither a preset {PRESETS} nor a file")
    try:
        tree = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(tree, dict):
        raise ConfigError(f"{path}: top level must be an object")
    preset = tree.pop("preset", "case1")
    if preset not in PRESETS:
        raise ConfigError(f"preset: unknown preset {preset!r}; expected one of {PRESETS}")
    return from_dict(deep_merge(preset_dict(preset), tree))
