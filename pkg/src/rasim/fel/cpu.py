from dataclasses import dataclass, field
from enum import Enum
from typing import Any, List, Optional, Sequence, Tuple

from rasim.errors import SimulationError
from rasim.fel.cache import CacheModel


class CpuBusy(SimulationError):
    pass


class UnknownCpu(SimulationError):
    pass


@dataclass(frozen=True)
class TraceSegment:
    """Compute cycles followed by a burst of memory accesses."""

    compute_cycles: int
    mem_reads: int = 0
    mem_writes: int = 0

    def __post_init__(self):
        assert self.compute_cycles >= 0 and self.mem_reads >= 0 and self.mem_writes >= 0, (
            f"trace segment counts must be non-negative, got {self}"
        )

    @property
    def accesses(self) -> int:
        return self.mem_reads + self.mem_writes


Trace = Tuple[TraceSegment, ...]


def make_trace(segments: Sequence[TraceSegment]) -> Trace:
    trace = tuple(segments)
    if len(trace) == 0:
        raise ValueError("A trace needs at least one segment")
    return trace


def trace_compute_cycles(trace: Trace) -> int:
    return sum(segment.compute_cycles for segment in trace)


def trace_accesses(trace: Trace) -> int:
    return sum(segment.accesses for segment in trace)


class CpuState(Enum):
    IDLE = "idle"
    BUSY = "busy"


@dataclass
class TraceRun:
    """Execution context of one trace on one CPU."""

    cpu_id: int
    trace: Trace
    start: int
    owner: Any = None
    end: Optional[int] = None
    segment_index: int = 0
    reads_left: int = 0
    writes_left: int = 0


@dataclass
class Cpu:
    cpu_id: int
    freq_hz: int
    cache: CacheModel
    run: Optional[TraceRun] = None
    # [start, end] busy intervals in ns; end is None while the current trace runs
    intervals: List[List[Optional[int]]] = field(default_factory=list)

    @property
    def state(self) -> CpuState:
        return CpuState.IDLE if self.run is None else CpuState.BUSY

    def busy_ns(self, lo: int, hi: int) -> int:
        """Nanoseconds spent busy within ``[lo, hi)``. An open interval counts up to ``hi``."""
        total = 0
        for start, end in reversed(self.intervals):
            end = hi if end is None else end
            if end <= lo:
                break
            total += max(0, min(end, hi) - max(start, lo))
        return total
