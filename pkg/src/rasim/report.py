import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List

import numpy as np
import pandas as pd

from rasim.fel.metrics import MetricsReport
from rasim.utils.math import format_fixed, mean_fraction

CPU_COLUMNS = ["cpu_id", "busy_cycles", "idle_cycles", "load", "cache_accesses", "cache_hits"]
ALLOC_COLUMNS = ["time_ns", "app_id", "requested_min", "requested_max", "granted", "cpu_list"]
# Context transitions and resource snapshots share one log; fields a row kind lacks stay empty
EVENT_COLUMNS = [
    "run",
    "time_ns",
    "kind",
    "context_id",
    "app_id",
    "fen_id",
    "cpu_list",
    "status",
    "cpu_id",
    "reserved_by",
    "recent_load",
]


@dataclass
class RunResult:
    run_index: int
    seed: int
    report: MetricsReport
    wall_clock_s: float = 0.0


def _cpu_list(cpus) -> str:
    return " ".join(str(c) for c in cpus)


def cpu_table(report: MetricsReport) -> pd.DataFrame:
    return pd.DataFrame(
        [
            [cpu.cpu_id, cpu.busy_cycles, cpu.idle_cycles, format_fixed(cpu.load), cpu.cache_accesses, cpu.cache_hits]
            for cpu in report.cpus
        ],
        columns=CPU_COLUMNS,
    )


def alloc_table(report: MetricsReport) -> pd.DataFrame:
    return pd.DataFrame(
        [[a.time_ns, a.app_id, a.requested_min, a.requested_max, a.granted, _cpu_list(a.cpus)] for a in report.allocations],
        columns=ALLOC_COLUMNS,
    )


def co_request_splits(report: MetricsReport) -> List[Dict[str, int]]:
    """Grants of every allocation round in which more than one application was served."""
    rounds: Dict[int, Dict[str, int]] = {}
    for a in report.allocations:
        if a.batch_size > 1:
            rounds.setdefault(a.time_ns, {})[a.app_id] = a.granted
    return [rounds[t] for t in sorted(rounds)]


@dataclass
class SummaryReport:
    """Per-run metrics of one policy and their averages."""

    policy: str
    runs: List[RunResult] = field(default_factory=list)

    @property
    def num_cpus(self) -> int:
        return len(self.runs[0].report.cpus)

    def avg_cpu_load(self) -> Fraction:
        return mean_fraction([r.report.avg_cpu_load for r in self.runs])

    def avg_cache_accesses(self) -> Fraction:
        return mean_fraction([r.report.total_cache_accesses for r in self.runs])

    def avg_bus_load(self) -> Fraction:
        return mean_fraction([r.report.bus_load for r in self.runs])

    def avg_cpu_table(self) -> pd.DataFrame:
        rows = []
        for cpu_id in range(self.num_cpus):
            per_run = [r.report.cpu(cpu_id) for r in self.runs]
            rows.append(
                [
                    cpu_id,
                    format_fixed(mean_fraction([c.busy_cycles for c in per_run])),
                    format_fixed(mean_fraction([c.idle_cycles for c in per_run])),
                    format_fixed(mean_fraction([c.load for c in per_run])),
                    format_fixed(mean_fraction([c.cache_accesses for c in per_run])),
                    format_fixed(mean_fraction([c.cache_hits for c in per_run])),
                ]
            )
        return pd.DataFrame(rows, columns=CPU_COLUMNS)

    def events_table(self) -> pd.DataFrame:
        rows = []
        for r in self.runs:
            # a snapshot precedes the dispatches it leads to at the same timestamp
            run_rows = [
                [r.run_index, s.time_ns, "snapshot"]
                + [None] * 5
                + [s.cpu_id, s.reserved_by, format_fixed(s.recent_load)]
                for s in r.report.snapshot_log
            ]
            run_rows += [
                [r.run_index, c.time_ns, "context", c.context_id, c.app_id, c.fen_id, _cpu_list(c.cpus), c.status]
                + [None] * 3
                for c in r.report.context_log
            ]
            rows += sorted(run_rows, key=lambda row: row[1])
        return pd.DataFrame(rows, columns=EVENT_COLUMNS, dtype=object)

    def latency_stats(self) -> pd.DataFrame:
        rows = [
            [it.app_id, it.claim_size, it.latency_ns]
            for r in self.runs
            for it in r.report.iterations
            if it.latency_ns is not None
        ]
        df = pd.DataFrame(rows, columns=["app_id", "claim_size", "latency_ns"])
        if df.empty:
            return df
        return df.groupby("app_id")["latency_ns"].agg(["count", "mean", "max"])

    def metrics(self) -> Dict[str, str]:
        return {
            "avg_cpu_load": format_fixed(self.avg_cpu_load()),
            "total_cache_accesses": format_fixed(self.avg_cache_accesses()),
            "bus_load": format_fixed(self.avg_bus_load()),
            "skipped_iterations": format_fixed(mean_fraction([sum(r.report.skipped.values()) for r in self.runs])),
        }

    def write(self, out_dir: str):
        os.makedirs(out_dir, exist_ok=True)
        for r in self.runs:
            cpu_table(r.report).to_csv(os.path.join(out_dir, f"run_{r.run_index}_cpu.csv"), index=False)
            alloc_table(r.report).to_csv(os.path.join(out_dir, f"run_{r.run_index}_alloc.csv"), index=False)
        self.avg_cpu_table().to_csv(os.path.join(out_dir, "avg_cpu.csv"), index=False)
        self.events_table().to_csv(os.path.join(out_dir, "events.csv"), index=False)
        with open(os.path.join(out_dir, "summary.txt"), "w") as f:
            f.write(self.render())

    def render(self) -> str:
        lines = [f"policy: {self.policy}", f"runs: {len(self.runs)}", ""]
        for name, value in self.metrics().items():
            lines.append(f"{name}: {value}")
        lines.append("")
        for r in self.runs:
            splits = co_request_splits(r.report)
            loads = " ".join(format_fixed(cpu.load) for cpu in r.report.cpus)
            lines.append(
                f"run {r.run_index} (seed {r.seed}): avg load {format_fixed(r.report.avg_cpu_load)}, "
                f"cpu loads [{loads}], cache accesses {r.report.total_cache_accesses}, "
                f"bus load {format_fixed(r.report.bus_load)}, skipped {r.report.skipped}, "
                f"in flight {len(r.report.in_flight)}, wall clock {r.wall_clock_s:.2f} s"
            )
            lines.append(f"  co-request splits: {splits}")
            for violation in r.report.violations:
                lines.append(f"  violation: {violation}")
        latency = self.latency_stats()
        if not latency.empty:
            lines.extend(["", "iteration latency (ns):", latency.to_string()])
        lines.append(f"\ntotal wall clock: {np.sum([r.wall_clock_s for r in self.runs]):.2f} s")
        return "\n".join(lines) + "\n"


def compare_table(summaries: List[SummaryReport]) -> pd.DataFrame:
    """One row per metric, one column per policy, in the order given."""
    metrics = [s.metrics() for s in summaries]
    names = list(metrics[0].keys())
    df = pd.DataFrame([[m[name] for m in metrics] for name in names], columns=[s.policy for s in summaries])
    df.insert(0, "metric", names)
    return df
