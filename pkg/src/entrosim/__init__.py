"""entrosim: value-entropy analytics plus a two-ecosystem market simulator.

The analytic half (:mod:`entrosim.entropy_core`) gives closed forms for niche
entropy, operating costs, the optimal niche partition and the demand level at
which a control-dominated ecosystem becomes cheaper to run than a
random-dominated one.  The simulation half plays two such ecosystems against
each other on a five-region grid under a configurable demand environment and
records entropy, cost and value benefit per tick.
"""

from .config import ScenarioConfig, load_scenario
from .entropy_core import (
    CostModel,
    EfficiencyRecord,
    ModeComparison,
    NicheDistribution,
    demand_dividing_point,
    max_entropy,
    mode_costs,
    operating_cost,
    optimal_niche_count_int,
    optimal_partition,
    shannon_entropy,
    value_benefit,
    value_efficiency,
)
from .errors import AuditError, ConfigError
from .runner import RunOutput, export, run, sweep

__version__ = "0.1.0"

__all__ = [
    "AuditError",
    "ConfigError",
    "CostModel",
    "EfficiencyRecord",
    "ModeComparison",
    "NicheDistribution",
    "RunOutput",
    "ScenarioConfig",
    "demand_dividing_point",
    "export",
    "load_scenario",
    "max_entropy",
    "mode_costs",
    "operating_cost",
    "optimal_niche_count_int",
    "optimal_partition",
    "run",
    "shannon_entropy",
    "sweep",
    "value_benefit",
    "value_efficiency",
    "__version__",
]
