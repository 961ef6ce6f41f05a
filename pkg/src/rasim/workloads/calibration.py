"""Standalone calibration runs.

Each branch of an application is executed once, alone, on an idle platform.
The measured makespans give the scalability curve (execution speed relative
to a single CPU) and the busy cycles give the standalone load curve.
"""

import dataclasses
import logging
from fractions import Fraction
from typing import List, Tuple

from rasim.config import PlatformConfig
from rasim.fel.cpu import Trace, trace_compute_cycles
from rasim.fel.kernel import Kernel, ns_to_cycles
from rasim.fel.platform import FunctionalLayer
from rasim.rel.demand import ScalabilityCurve, StandaloneLoadCurve

logger = logging.getLogger(__name__)


def measure_branch(traces: List[Trace], platform: PlatformConfig) -> Tuple[int, int]:
    """Run one trace per CPU from time zero. Returns ``(makespan_ns, busy_cycles)``."""
    kernel = Kernel()
    fel = FunctionalLayer(kernel, platform)
    runs = [fel.execute_trace(cpu_id, trace, start=0) for cpu_id, trace in enumerate(traces)]
    while (t := kernel.next_time()) is not None:
        kernel.run_until(t)
    assert all(run.end is not None for run in runs), "calibration run did not finish"
    makespan = max(run.end for run in runs)
    report = fel.report(makespan)
    return makespan, sum(cpu.busy_cycles for cpu in report.cpus)


def calibrate(app, platform: PlatformConfig) -> Tuple[ScalabilityCurve, StandaloneLoadCurve]:
    """Scalability and standalone load of ``app`` for every claim size it can be granted."""
    if app.hit_rate is not None:
        platform = dataclasses.replace(platform, cache=dataclasses.replace(platform.cache, hit_rate=app.hit_rate))
    period_cycles = ns_to_cycles(app.period_ns, platform.freq_hz)
    speeds: List[Fraction] = []
    loads: List[Fraction] = []
    for n in range(1, app.max_claim + 1):
        traces = app.branch_traces(n)
        work = sum(trace_compute_cycles(trace) for trace in traces)
        makespan, busy = measure_branch(traces, platform)
        speeds.append(Fraction(work, makespan) if makespan > 0 else Fraction(1))
        loads.append(min(Fraction(1), Fraction(busy, n * period_cycles)))
        logger.info("%s on %d CPUs: makespan %d ns, busy %d cycles", app.app_id, n, makespan, busy)
    speedup = tuple(speed / speeds[0] if speeds[0] > 0 else Fraction(1) for speed in speeds)
    return ScalabilityCurve(app.app_id, speedup), StandaloneLoadCurve(app.app_id, tuple(loads))
