import dataclasses
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, List, Optional, Sequence, cast

import wandb
from tqdm import tqdm

from rasim.air.graph import print_air
from rasim.config import RunConfig
from rasim.report import RunResult, SummaryReport, compare_table
from rasim.simulator import Simulator
from rasim.workloads.apps import AppBundle, build_workloads

logger = logging.getLogger(__name__)


def simulate_run(cfg: RunConfig, apps: Sequence[AppBundle], run_index: int) -> RunResult:
    seed = cfg.seed + run_index
    start = time.perf_counter()
    sim = Simulator(
        cfg.platform,
        apps,
        policy=cfg.policy,
        claim_cap=cfg.claim_cap,
        seed=seed,
        load_window_ns=cfg.load_window_ns,
        check_invariants=cfg.check_invariants,
    )
    report = sim.run_until(cfg.sim_time_ns)
    wall_clock = time.perf_counter() - start
    logger.info(
        "run %d (seed %d, %s): avg load %.4f, %d events in %.2f s",
        run_index,
        seed,
        cfg.policy,
        float(report.avg_cpu_load),
        report.events_processed,
        wall_clock,
    )
    return RunResult(run_index=run_index, seed=seed, report=report, wall_clock_s=wall_clock)


def run_experiment(cfg: RunConfig, apps: Optional[Sequence[AppBundle]] = None) -> SummaryReport:
    """Run ``cfg.runs`` independent simulations and write their metrics to ``cfg.output_dir``."""
    if apps is None:
        apps = build_workloads(cfg.workloads, cfg.platform, cfg.claim_cap)

    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(simulate_run, cfg, apps, i) for i in range(cfg.runs)]
            results = [f.result() for f in tqdm(futures, desc=cfg.policy, disable=not cfg.progress)]
    else:
        results = [
            simulate_run(cfg, apps, i) for i in tqdm(range(cfg.runs), desc=cfg.policy, disable=not cfg.progress)
        ]

    summary = SummaryReport(policy=cfg.policy, runs=results)
    summary.write(cfg.output_dir)
    cfg.save_config(os.path.join(cfg.output_dir, "config.json"))
    for app in apps:
        with open(os.path.join(cfg.output_dir, f"air_{app.app_id}.json"), "w") as f:
            f.write(print_air(app.air))

    if cfg.log_to_wandb:
        wandb_run = wandb.init(
            project=cfg.wandb_project,
            config=cast(Any, cfg.to_dict()),
            name=f"{cfg.run_name}-{cfg.policy}",
            entity=cfg.wandb_entity,
            reinit=True,
        )
        for r in results:
            wandb.log(
                {
                    "metrics/avg_cpu_load": float(r.report.avg_cpu_load),
                    "metrics/total_cache_accesses": r.report.total_cache_accesses,
                    "metrics/bus_load": float(r.report.bus_load),
                    "details/skipped_iterations": sum(r.report.skipped.values()),
                    "details/wall_clock_s": r.wall_clock_s,
                },
                step=r.run_index,
            )
        wandb_run.finish()

    for r in results:
        for violation in r.report.violations:
            logger.warning("run %d: %s", r.run_index, violation)
    return summary


def compare_policies(cfg: RunConfig, policies: List[str]):
    """Run the same experiment under each policy and tabulate the headline metrics side by side."""
    assert len(policies) >= 2, "comparing needs at least two policies"
    apps = build_workloads(cfg.workloads, cfg.platform, cfg.claim_cap)
    summaries = []
    for policy in policies:
        policy_cfg = dataclasses.replace(cfg, policy=policy, output_dir=os.path.join(cfg.output_dir, policy))
        summaries.append(run_experiment(policy_cfg, apps))
    table = compare_table(summaries)
    os.makedirs(cfg.output_dir, exist_ok=True)
    table.to_csv(os.path.join(cfg.output_dir, "compare.csv"), index=False)
    return table, summaries
