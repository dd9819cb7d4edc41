"""Command-line interface: run / sweep / analyze.

Exit codes: 0 on success, 2 on configuration errors, 1 on audit or runtime
failures.  Logging verbosity is controlled only by the ENTROSIM_LOG
environment variable (debug, info, warning, error).
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from . import entropy_core as ec
from .config import PRESETS, load_scenario
from .errors import AuditError, ConfigError
from .runner import export, run, sweep

log = logging.getLogger("entrosim")


def _configure_logging() -> None:
    level = os.environ.get("ENTROSIM_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _parse_seeds(spec: str) -> list[int]:
    if ".." in spec:
        lo_str, hi_str = spec.split("..", 1)
        lo, hi = int(lo_str), int(hi_str)
        if hi < lo:
            raise ConfigError(f"seeds: empty range {spec!r}")
        return list(range(lo, hi + 1))
    return [int(s) for s in spec.split(",") if s.strip()]


def _load(args) -> "ScenarioConfig":
    config = load_scenario(args.config if args.config else args.preset)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "ticks", None) is not None:
        overrides["ticks"] = args.ticks
    if getattr(args, "niche", None) is not None:
        overrides["niche_mode"] = args.niche
    if getattr(args, "events", False):
        overrides["events"] = True
    return config.with_overrides(**overrides)


def _cmd_run(args) -> int:
    config = _load(args)
    output = run(config)
    paths = export(output, args.out)
    final = output.summary["final"]
    print(f"run seed={config.seed} ticks={config.ticks} -> {paths['metrics']}")
    for eco in ("alpha", "beta"):
        f = final[eco]
        print(f"  {eco}: n={f['n_agents']} H={f['entropy']:.4f} "
              f"C={f['cum_cost']:.1f} V={f['value_benefit']:.1f}")
    if not output.valid:
        print("audit FAILED: run marked invalid "
              f"(delta={output.ledger.delta!r})", file=sys.stderr)
        return 1
    print("audit: balanced")
    return 0


def _cmd_sweep(args) -> int:
    config = _load(args)
    seeds = _parse_seeds(args.seeds)
    report = sweep(config, seeds, jobs=args.jobs, out_dir=args.out)
    fr = report["fractions"]
    print(f"sweep over seeds {seeds}: {report['n_valid']}/{len(seeds)} valid")
    print(f"  random_wins_mature:        {fr['random_wins_mature']}")
    print(f"  control_wins_emerging:     {fr['control_wins_emerging']}")
    print(f"  optimal_entropy_proximity: {fr['optimal_entropy_proximity']}")
    if report["invalid_seeds"]:
        print(f"invalid seeds: {report['invalid_seeds']}", file=sys.stderr)
        return 1
    return 0


def _read_census_table(path: Path) -> list[tuple[str, int]]:
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["niche", "count"]:
                raise ConfigError(f"{path}: expected header 'niche,count'")
            rows = [(row[0], int(row[1])) for row in reader if row]
    except FileNotFoundError:
        raise ConfigError(f"census file not found: {path}") from None
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: malformed census row ({exc})") from None
    if not rows:
        raise ConfigError(f"{path}: census is empty")
    return rows


def _cmd_analyze(args) -> int:
    rows = _read_census_table(Path(args.census))
    counts = [count for _, count in rows]
    dist = ec.NicheDistribution(counts)
    if dist.n_total < 1:
        raise ConfigError("census holds no nodes")
    n_nodes = dist.n_total
    m = dist.n_classes
    k = args.k
    entropy = ec.shannon_entropy(dist)
    cost_now = ec.operating_cost(ec.CostModel(k, n_nodes, m))
    best = ec.optimal_partition(k, n_nodes)
    m_int = ec.optimal_niche_count_int(k, n_nodes)

    print(f"nodes (N):            {n_nodes}")
    print(f"occupied niches (m):  {m}")
    print(f"entropy H:            {entropy:.6f} bits")
    print(f"max entropy:          {ec.max_entropy(m):.6f} bits")
    print(f"cost at m={m}:         c1={cost_now.management:.6g} "
          f"c2={cost_now.matching:.6g} c={cost_now.total:.6g}")
    print(f"optimal niche count:  m1={best.niche_count:.6g} (integer best: {m_int})")
    print(f"minimum cost c_min:   {best.min_cost:.6g}")
    print(f"optimal entropy H_b:  {best.entropy_bits:.6f} bits")
    if m_int == m:
        print("verdict:              at optimum")
    else:
        print(f"verdict:              off optimum (cost overhead "
              f"{cost_now.total - best.min_cost:.6g})")
    if args.gains is not None:
        print(f"value benefit at m:   {ec.value_benefit(args.gains, cost_now.total):.6g}")
        print(f"value benefit at m1:  {ec.value_benefit(args.gains, best.min_cost):.6g}")
    if args.ma is not None and args.mb is not None:
        d_prime = ec.demand_dividing_point(n_nodes, args.ma, args.mb)
        print(f"dividing point d' (m_A={args.ma:g}, m_B={args.mb:g}): {d_prime:.6g}")
        print("  demand below d' favours the random-dominated mode's cost;")
        print("  demand above d' favours the control-dominated mode's cost.")
    elif args.ma is not None or args.mb is not None:
        raise ConfigError("--ma and --mb must be given together")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entrosim",
        description="Value-entropy analytics and the two-ecosystem market simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one scenario and export CSV/JSON")
    p_run.add_argument("--preset", choices=PRESETS, default="case1")
    p_run.add_argument("--config", help="JSON scenario file merged over its preset")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--ticks", type=int)
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--niche", choices=("attribute", "efficiency"))
    p_run.add_argument("--events", action="store_true", help="also export events.csv")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a scenario over many seeds")
    p_sweep.add_argument("--preset", choices=PRESETS, default="case1")
    p_sweep.add_argument("--config")
    p_sweep.add_argument("--seeds", required=True, help="e.g. 1..10 or 3,5,8")
    p_sweep.add_argument("--ticks", type=int)
    p_sweep.add_argument("--niche", choices=("attribute", "efficiency"))
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_an = sub.add_parser("analyze", help="closed-form report for a niche census")
    p_an.add_argument("--census", required=True, help="CSV with columns niche,count")
    p_an.add_argument("--k", type=float, required=True, help="unit-time cost coefficient")
    p_an.add_argument("--ma", type=float, help="control-mode niche count for d'")
    p_an.add_argument("--mb", type=float, help="random-mode niche count for d'")
    p_an.add_argument("--gains", type=float, help="total gains for value-benefit lines")
    p_an.set_defaults(func=_cmd_analyze)
    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AuditError as exc:
        print(f"audit error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
