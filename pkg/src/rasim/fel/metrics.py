from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from rasim.fel.cpu import UnknownCpu


@dataclass
class CpuMetrics:
    cpu_id: int
    busy_cycles: int
    idle_cycles: int
    cache_accesses: int
    cache_hits: int
    # busy intervals in ns, clipped to the horizon
    intervals: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def load(self) -> Fraction:
        total = self.busy_cycles + self.idle_cycles
        return Fraction(self.busy_cycles, total) if total > 0 else Fraction(0)


@dataclass(frozen=True)
class AllocationRecord:
    time_ns: int
    app_id: str
    requested_min: int
    requested_max: int
    granted: int
    cpus: Tuple[int, ...]
    batch_size: int = 1


@dataclass
class IterationRecord:
    app_id: str
    iteration: int
    trigger_ns: int
    request_ns: Optional[int] = None
    claim_size: Optional[int] = None
    end_ns: Optional[int] = None

    @property
    def latency_ns(self) -> Optional[int]:
        return None if self.end_ns is None else self.end_ns - self.trigger_ns


@dataclass(frozen=True)
class ContextRecord:
    time_ns: int
    context_id: int
    app_id: str
    fen_id: str
    cpus: Tuple[int, ...]
    status: str


@dataclass(frozen=True)
class SnapshotRecord:
    """One CPU's entry of a status snapshot handed to the resource manager."""

    time_ns: int
    cpu_id: int
    reserved_by: Optional[str]
    recent_load: Fraction


@dataclass
class MetricsReport:
    horizon_ns: int
    horizon_cycles: int
    freq_hz: int
    cpus: List[CpuMetrics]
    bus_transfers: int = 0
    bus_busy_cycles: int = 0
    allocations: List[AllocationRecord] = field(default_factory=list)
    iterations: List[IterationRecord] = field(default_factory=list)
    skipped: Dict[str, int] = field(default_factory=dict)
    context_log: List[ContextRecord] = field(default_factory=list)
    snapshot_log: List[SnapshotRecord] = field(default_factory=list)
    in_flight: List[int] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)
    events_processed: int = 0

    @property
    def bus_load(self) -> Fraction:
        if self.horizon_cycles == 0:
            return Fraction(0)
        return Fraction(self.bus_busy_cycles, self.horizon_cycles)

    @property
    def avg_cpu_load(self) -> Fraction:
        if len(self.cpus) == 0:
            return Fraction(0)
        return sum((cpu.load for cpu in self.cpus), Fraction(0)) / len(self.cpus)

    @property
    def total_cache_accesses(self) -> int:
        return sum(cpu.cache_accesses for cpu in self.cpus)

    def cpu(self, cpu_id: int) -> CpuMetrics:
        if not 0 <= cpu_id < len(self.cpus):
            raise UnknownCpu(f"CPU {cpu_id} not in report with {len(self.cpus)} CPUs")
        return self.cpus[cpu_id]


def cpu_load(report: MetricsReport, cpu_id: int) -> float:
    """Fraction of the horizon the CPU spent busy (compute, cache hits and miss stalls)."""
    return float(report.cpu(cpu_id).load)
