"""Trace-driven MPSoC model: CPUs with private L1 caches on a shared bus."""

import logging
from fractions import Fraction
from typing import Any, Callable, List, Optional

from rasim.config import PlatformConfig
from rasim.fel.bus import SharedBus
from rasim.fel.cache import Access, CacheModel, Outcome
from rasim.fel.cpu import Cpu, CpuBusy, Trace, TraceRun, UnknownCpu
from rasim.fel.kernel import Event, EventKind, Kernel, SimTime, ns_per_cycle, ns_to_cycles
from rasim.fel.metrics import CpuMetrics, MetricsReport

logger = logging.getLogger(__name__)

TraceDoneCallback = Callable[[int, TraceRun], None]


class FunctionalLayer:
    """Executes traces on the platform and keeps the monitor counters.

    Per segment, the compute cycles elapse first; then every memory access
    consults the CPU's cache for one cycle. A miss posts a line fill to the
    shared bus and stalls the CPU until the transfer is done. All of these
    cycles count as busy.
    """

    def __init__(self, kernel: Kernel, cfg: PlatformConfig):
        self.kernel = kernel
        self.cfg = cfg
        self.freq_hz = cfg.freq_hz
        self.cycle_ns = ns_per_cycle(cfg.freq_hz)
        self.transfer_ns = cfg.bus.transfer_cycles * self.cycle_ns
        self.cpus: List[Cpu] = [
            Cpu(
                cpu_id=i,
                freq_hz=cfg.freq_hz,
                cache=CacheModel.from_hit_rate(
                    cfg.cache.hit_rate, size_bits=cfg.cache.size_bits, line_bits=cfg.cache.line_bits
                ),
            )
            for i in range(cfg.num_cpus)
        ]
        self.bus = SharedBus(cfg.num_cpus, cfg.bus.transfer_cycles)
        self._grant_scheduled = False
        self._trace_done_callbacks: List[TraceDoneCallback] = []

        kernel.register(EventKind.SEGMENT_READY, self._on_segment_ready)
        kernel.register(EventKind.LINE_FILL, self._on_line_fill)
        kernel.register(EventKind.BUS_GRANT, self._on_bus_grant)
        kernel.register(EventKind.TRANSFER_DONE, self._on_transfer_done)
        kernel.register(EventKind.TRACE_DONE, self._on_trace_done)

    @property
    def num_cpus(self) -> int:
        return len(self.cpus)

    def cpu(self, cpu_id: int) -> Cpu:
        if not 0 <= cpu_id < len(self.cpus):
            raise UnknownCpu(f"CPU {cpu_id} does not exist on a {len(self.cpus)}-CPU platform")
        return self.cpus[cpu_id]

    def on_trace_done(self, callback: TraceDoneCallback):
        self._trace_done_callbacks.append(callback)

    def execute_trace(self, cpu_id: int, trace: Trace, start: Optional[SimTime] = None, owner: Any = None) -> TraceRun:
        """Start ``trace`` on an idle CPU.

        The CPU stays busy until the trace completes; completion is signalled by
        a TRACE_DONE event, after which ``run.end`` holds the completion time.
        """
        cpu = self.cpu(cpu_id)
        if cpu.run is not None:
            raise CpuBusy(f"CPU {cpu_id} is still running a trace started at {cpu.run.start} ns")
        assert len(trace) > 0, "cannot execute an empty trace"
        start = self.kernel.now if start is None else start
        run = TraceRun(cpu_id=cpu_id, trace=trace, start=start, owner=owner)
        cpu.run = run
        cpu.intervals.append([start, None])
        self._start_segment(run, start)
        return run

    def _start_segment(self, run: TraceRun, t: SimTime):
        if run.segment_index == len(run.trace):
            self.kernel.schedule(t, EventKind.TRACE_DONE, run.cpu_id)
            return
        segment = run.trace[run.segment_index]
        run.reads_left = segment.mem_reads
        run.writes_left = segment.mem_writes
        self.kernel.schedule(t + segment.compute_cycles * self.cycle_ns, EventKind.SEGMENT_READY, run.cpu_id)

    def _issue_accesses(self, run: TraceRun, t: SimTime):
        cache = self.cpus[run.cpu_id].cache
        while run.reads_left > 0 or run.writes_left > 0:
            if run.reads_left > 0:
                run.reads_left -= 1
                kind = Access.READ
            else:
                run.writes_left -= 1
                kind = Access.WRITE
            outcome = cache.access(kind)
            t += self.cycle_ns
            if outcome is Outcome.MISS:
                # the fill is posted once the one-cycle lookup is over
                self.kernel.schedule(t, EventKind.LINE_FILL, run.cpu_id)
                return
        run.segment_index += 1
        self._start_segment(run, t)

    def _post_line_fill(self, cpu_id: int):
        self.bus.request(cpu_id)
        if not self._grant_scheduled:
            self.kernel.schedule(max(self.kernel.now, self.bus.busy_until), EventKind.BUS_GRANT)
            self._grant_scheduled = True

    def _on_segment_ready(self, event: Event):
        self._issue_accesses(self.cpus[event.payload].run, event.time)

    def _on_line_fill(self, event: Event):
        self._post_line_fill(event.payload)

    def _on_bus_grant(self, event: Event):
        self._grant_scheduled = False
        granted = self.bus.arbitrate(event.time, self.transfer_ns)
        if granted is not None:
            cpu_id, _ = granted
            self.kernel.schedule(event.time + self.transfer_ns, EventKind.TRANSFER_DONE, cpu_id)
        if self.bus.has_pending():
            self.kernel.schedule(self.bus.busy_until, EventKind.BUS_GRANT)
            self._grant_scheduled = True

    def _on_transfer_done(self, event: Event):
        self._issue_accesses(self.cpus[event.payload].run, event.time)

    def _on_trace_done(self, event: Event):
        cpu = self.cpus[event.payload]
        run = cpu.run
        assert run is not None, f"TRACE_DONE for idle CPU {cpu.cpu_id}"
        run.end = event.time
        cpu.intervals[-1][1] = event.time
        cpu.run = None
        for callback in self._trace_done_callbacks:
            callback(cpu.cpu_id, run)

    def recent_load(self, cpu_id: int, now: SimTime, window_ns: SimTime) -> Fraction:
        """Busy share of the trailing window ``[now - window, now)``, clipped at time zero."""
        lo = max(0, now - window_ns)
        if now <= lo:
            return Fraction(0)
        return Fraction(self.cpu(cpu_id).busy_ns(lo, now), now - lo)

    def report(self, t_end: SimTime) -> MetricsReport:
        horizon_cycles = ns_to_cycles(t_end, self.freq_hz)
        cpus = []
        for cpu in self.cpus:
            busy = ns_to_cycles(cpu.busy_ns(0, t_end), self.freq_hz)
            cpus.append(
                CpuMetrics(
                    cpu_id=cpu.cpu_id,
                    busy_cycles=busy,
                    idle_cycles=horizon_cycles - busy,
                    cache_accesses=cpu.cache.access_count,
                    cache_hits=cpu.cache.hit_count,
                    intervals=[
                        (start, t_end if end is None else min(end, t_end))
                        for start, end in cpu.intervals
                        if start < t_end
                    ],
                )
            )
        bus_busy_ns = sum(max(0, min(t + self.transfer_ns, t_end) - t) for t, _ in self.bus.grants if t < t_end)
        return MetricsReport(
            horizon_ns=t_end,
            horizon_cycles=horizon_cycles,
            freq_hz=self.freq_hz,
            cpus=cpus,
            bus_transfers=sum(1 for t, _ in self.bus.grants if t < t_end),
            bus_busy_cycles=ns_to_cycles(bus_busy_ns, self.freq_hz),
            events_processed=self.kernel.processed,
        )

    def run_until(self, t_end: SimTime) -> MetricsReport:
        self.kernel.run_until(t_end)
        return self.report(t_end)
