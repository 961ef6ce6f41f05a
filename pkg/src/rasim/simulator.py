"""One simulation run: the resource-aware layer driving the functional layer through the interface."""

import logging
from collections import defaultdict
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from rasim.config import PlatformConfig
from rasim.fel.kernel import Event, EventKind, Kernel, SimTime, ns_per_cycle
from rasim.fel.metrics import IterationRecord, MetricsReport
from rasim.fel.platform import FunctionalLayer
from rasim.fel_interface.execution_controller import ExecutionController, FenContext
from rasim.fel_interface.status_collector import StatusCollector
from rasim.rel.checker import ClaimInvariantChecker
from rasim.rel.demand import Demand
from rasim.rel.executor import (
    Action,
    ClaimGranted,
    DispatchFen,
    ExecutorEvent,
    ExecutorState,
    FenComplete,
    IterationDone,
    IterationTrigger,
    Release,
    RequestResources,
    SkipIteration,
    executor_step,
)
from rasim.rel.policy import Curves
from rasim.rel.resource_manager import ResourceManager
from rasim.workloads.apps import AppBundle

logger = logging.getLogger(__name__)


def curves_of(apps: Sequence[AppBundle]) -> Curves:
    return Curves(
        scalability={app.app_id: app.scalability for app in apps if app.scalability is not None},
        standalone_load={app.app_id: app.standalone_load for app in apps if app.standalone_load is not None},
    )


class Simulator:
    """
    Wires the layers of one run together and drives the applications periodically.

    Args:
        platform: Platform configuration.
        apps: Applications with their AIRs, trace tables and curves.
        policy: Allocation policy name.
        claim_cap: Largest claim one application may hold.
        seed: Seed of the request jitter.
        load_window_ns: Trailing window of the recent load reported to the resource manager.
        check_invariants: Attach the online claim checker.
    """

    def __init__(
        self,
        platform: PlatformConfig,
        apps: Sequence[AppBundle],
        policy: str = "scalability",
        claim_cap: Optional[int] = None,
        seed: int = 0,
        load_window_ns: int = 100_000_000,
        check_invariants: bool = True,
    ):
        self.kernel = Kernel()
        self.fel = FunctionalLayer(self.kernel, platform)
        claim_cap = claim_cap if claim_cap is not None else max(1, platform.num_cpus - 1)
        self.rm = ResourceManager(
            platform.num_cpus,
            claim_cap,
            policy=policy,
            curves=curves_of(apps),
            cpu_busy=lambda cpu_id: self.fel.cpus[cpu_id].run is not None,
        )
        self.controller = ExecutionController(self.kernel, self.fel, self.rm.holder)
        self.collector = StatusCollector(self.fel, self.rm.holder, load_window_ns)
        self.apps: Dict[str, AppBundle] = {app.app_id: app for app in apps}
        self.executors: Dict[str, ExecutorState] = {app.app_id: ExecutorState(app.app_id, app.air) for app in apps}
        self.cycle_ns = ns_per_cycle(platform.freq_hz)
        self.seed = seed
        self._rngs = {app.app_id: np.random.default_rng([seed, i]) for i, app in enumerate(apps)}
        self._pending: Dict[SimTime, List[Demand]] = defaultdict(list)
        self.iterations: Dict[Tuple[str, int], IterationRecord] = {}
        self.skipped: Dict[str, int] = {app.app_id: 0 for app in apps}
        self.checker: Optional[ClaimInvariantChecker] = None

        self.kernel.register(EventKind.ITERATION_TRIGGER, self._on_iteration_trigger)
        self.kernel.register(EventKind.REQUEST_ARRIVAL, self._on_request_arrival)
        self.kernel.register(EventKind.ALLOCATION_ROUND, self._on_allocation_round)
        self.controller.on_finished(self._on_context_finished)
        if check_invariants:
            self.checker = ClaimInvariantChecker(self.rm, self.controller, self.fel)
            self.kernel.add_observer(self.checker)

        for app in apps:
            self.kernel.schedule(app.first_request_ns, EventKind.ITERATION_TRIGGER, app.app_id)

    def _jitter(self, app: AppBundle) -> SimTime:
        if app.jitter_ns == 0:
            return 0
        return int(self._rngs[app.app_id].integers(0, app.jitter_ns // self.cycle_ns, endpoint=True)) * self.cycle_ns

    def _step(self, app_id: str, event: ExecutorEvent):
        self._apply(app_id, executor_step(self.executors[app_id], event))

    def _apply(self, app_id: str, actions: List[Action]):
        state = self.executors[app_id]
        app = self.apps[app_id]
        now = self.kernel.now
        for action in actions:
            if isinstance(action, RequestResources):
                self.iterations[(app_id, state.iteration)].request_ns = now
                self.kernel.schedule(now + self._jitter(app), EventKind.REQUEST_ARRIVAL, action.demand)
            elif isinstance(action, DispatchFen):
                claim = action.claim
                traces = app.traces_for(action.trace_ref, claim.size)
                state.awaited_context = self.controller.dispatch_fen(
                    action.fen_id, app.air.graph_id, claim.resources, traces, app_id=app_id, hit_rate=app.hit_rate
                )
            elif isinstance(action, Release):
                self.rm.release_resource(action.claim)
            elif isinstance(action, IterationDone):
                self.iterations[(app_id, action.iteration)].end_ns = now
            elif isinstance(action, SkipIteration):
                self.skipped[app_id] += 1
                logger.info("[%s] %s skips an iteration, iteration %d still running", now, app_id, action.iteration)

    def _on_iteration_trigger(self, event: Event):
        app_id = event.payload
        app = self.apps[app_id]
        self.kernel.schedule(event.time + app.period_ns, EventKind.ITERATION_TRIGGER, app_id)
        state = self.executors[app_id]
        if state.current_node is None:
            self.iterations[(app_id, state.iteration)] = IterationRecord(app_id, state.iteration, event.time)
        self._step(app_id, IterationTrigger(event.time))

    def _on_request_arrival(self, event: Event):
        # Requests of one timestamp are served together, after every arrival of that timestamp
        if not self._pending[event.time]:
            self.kernel.schedule(event.time, EventKind.ALLOCATION_ROUND)
        self._pending[event.time].append(event.payload)

    def _on_allocation_round(self, event: Event):
        demands = self._pending.pop(event.time)
        snapshot = self.collector.collect(event.time)
        iterations = {d.app_id: self.executors[d.app_id].iteration for d in demands}
        claims = self.rm.serve(demands, snapshot, event.time, iterations)
        for demand in sorted(demands, key=lambda d: d.app_id):
            claim = claims[demand.app_id]
            self.iterations[(demand.app_id, claim.iteration)].claim_size = claim.size
            self._step(demand.app_id, ClaimGranted(claim))

    def _on_context_finished(self, context: FenContext):
        self._step(context.app_id, FenComplete(context.context_id))

    def run_until(self, t_end: SimTime) -> MetricsReport:
        self.kernel.run_until(t_end)
        report = self.fel.report(t_end)
        report.allocations = list(self.rm.allocation_log)
        report.iterations = sorted(self.iterations.values(), key=lambda r: (r.trigger_ns, r.app_id))
        report.skipped = dict(self.skipped)
        report.context_log = list(self.controller.log)
        report.snapshot_log = list(self.collector.log)
        report.in_flight = [c.context_id for c in self.controller.active()]
        if self.checker is not None:
            report.violations = list(self.checker.finalize())
        report.events_processed = self.kernel.processed
        return report
