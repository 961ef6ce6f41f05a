from dataclasses import dataclass
from fractions import Fraction
from typing import List

from rasim.fel.cpu import Trace, TraceSegment, make_trace


@dataclass(frozen=True)
class TraceParams:
    total_work_cycles: int
    parallel_fraction: Fraction
    mem_accesses_per_kcycle: int = 1
    segment_count: int = 16

    def __post_init__(self):
        assert self.total_work_cycles >= 0, "total work must be non-negative"
        assert 0 <= self.parallel_fraction <= 1, "parallel fraction must lie in [0, 1]"
        assert self.mem_accesses_per_kcycle >= 0 and self.segment_count >= 1


def split_evenly(total: int, parts: int) -> List[int]:
    """``total`` in ``parts`` integer shares; the remainder goes to the earliest shares."""
    base, rest = divmod(total, parts)
    return [base + (1 if i < rest else 0) for i in range(parts)]


def synth_trace(params: TraceParams, n_cpus: int) -> List[Trace]:
    """
    Amdahl-style traces for one execution of a functional node on ``n_cpus`` CPUs.

    The serial share ``floor(total * (1 - parallel_fraction))`` runs on the
    first CPU, the parallel rest is spread evenly over all CPUs. Each CPU's
    work is cut into ``segment_count`` segments; memory accesses follow the
    work (``mem_accesses_per_kcycle``) with reads and writes at 3:1.
    """
    assert n_cpus >= 1, "need at least one CPU"
    serial = int(params.total_work_cycles * (1 - params.parallel_fraction))
    work = split_evenly(params.total_work_cycles - serial, n_cpus)
    work[0] += serial

    traces = []
    for cycles in work:
        accesses = cycles * params.mem_accesses_per_kcycle // 1000
        reads = 3 * accesses // 4
        segments = zip(
            split_evenly(cycles, params.segment_count),
            split_evenly(reads, params.segment_count),
            split_evenly(accesses - reads, params.segment_count),
        )
        traces.append(make_trace([TraceSegment(c, r, w) for c, r, w in segments]))
    return traces
