import argparse
import dataclasses
import logging
import sys
from typing import List, Optional

from rasim.config import POLICY_NAMES, RunConfig, load_config
from rasim.errors import ConfigError, SchemaError, SimulationError
from rasim.runner import compare_policies, run_experiment

logger = logging.getLogger("rasim")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Simulate periodic resource-aware applications on a multi-core platform.",
    )
    parser.add_argument("--config", help="JSON config document; defaults apply to every missing key")
    parser.add_argument("--policy", help=f"allocation policy, one of {', '.join(POLICY_NAMES)}")
    parser.add_argument("--runs", type=int, help="number of independent runs")
    parser.add_argument("--seed", type=int, help="seed of the first run; run i uses seed + i")
    parser.add_argument("--sim-time-ms", type=int, help="simulated time per run in ms")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--compare", help="comma-separated policies to run side by side")
    parser.add_argument("--workers", type=int, help="parallel worker processes for the runs")
    parser.add_argument("--quiet", action="store_true", help="no progress bars")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    overrides = {
        "policy": args.policy,
        "runs": args.runs,
        "seed": args.seed,
        "sim_time_ms": args.sim_time_ms,
        "output_dir": args.out,
        "workers": args.workers,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.quiet:
        overrides["progress"] = False
    try:
        return dataclasses.replace(cfg, **overrides)
    except SchemaError as e:
        raise SchemaError(f"--{e.path.replace('_', '-')}", e.message)


def parse_policies(text: str) -> List[str]:
    policies = [p.strip() for p in text.split(",") if p.strip()]
    for p in policies:
        if p not in POLICY_NAMES:
            raise SchemaError("--compare", f"unknown policy {p!r}, choose from {list(POLICY_NAMES)}")
    if len(policies) < 2:
        raise SchemaError("--compare", "needs at least two policies")
    return policies


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors
        return 0 if e.code in (0, None) else ConfigError.exit_code
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config) if args.config is not None else RunConfig()
        cfg = apply_overrides(cfg, args)
        if args.compare:
            table, _ = compare_policies(cfg, parse_policies(args.compare))
            print(table.to_string(index=False))
        else:
            summary = run_experiment(cfg)
            print(summary.render(), end="")
    except ConfigError as e:
        logger.error("config error: %s", e)
        return e.exit_code
    except SimulationError as e:
        logger.error("simulation failed: %s", e)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
