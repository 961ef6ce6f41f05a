import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from rasim.errors import SimulationError
from rasim.fel.cpu import CpuBusy, Trace, TraceRun
from rasim.fel.kernel import Event, EventKind, Kernel
from rasim.fel.metrics import ContextRecord
from rasim.fel.platform import FunctionalLayer

logger = logging.getLogger(__name__)


class CpuNotReserved(SimulationError):
    pass


class UnknownContext(SimulationError):
    pass


class AlreadyFinished(SimulationError):
    pass


class ContextStatus(Enum):
    EXECUTION_STARTED = "execution_started"
    EXECUTION_FINISHED = "execution_finished"


@dataclass
class FenContext:
    context_id: int
    fen_id: str
    air_id: str
    app_id: str
    cpu_ids: Tuple[int, ...]
    start: int
    status: ContextStatus = ContextStatus.EXECUTION_STARTED
    end: Optional[int] = None
    running: int = 0


FinishedCallback = Callable[[FenContext], None]


class ExecutionController:
    """Dispatches functional nodes onto claimed CPUs and reports their completion.

    Every dispatch opens a context; the context finishes once all of its CPUs
    are done (barrier), and the owner is notified with a FEN_COMPLETE event at
    that timestamp.
    """

    def __init__(self, kernel: Kernel, platform: FunctionalLayer, holder: Callable[[int], Optional[str]]):
        self.kernel = kernel
        self.platform = platform
        self.holder = holder
        self.contexts: Dict[int, FenContext] = {}
        self.log: List[ContextRecord] = []
        self._finished_callbacks: List[FinishedCallback] = []
        platform.on_trace_done(self._on_trace_done)
        kernel.register(EventKind.FEN_COMPLETE, self._on_fen_complete)

    def on_finished(self, callback: FinishedCallback):
        self._finished_callbacks.append(callback)

    def active(self) -> List[FenContext]:
        return [c for c in self.contexts.values() if c.status is ContextStatus.EXECUTION_STARTED]

    def dispatch_fen(
        self,
        fen_id: str,
        air_id: str,
        cpu_ids: Sequence[int],
        traces: Sequence[Trace],
        app_id: Optional[str] = None,
        hit_rate: Optional[str] = None,
    ) -> int:
        """Start one trace per CPU under a new context and return its id.

        ``hit_rate`` is the owning application's cache hit rate; the platform's
        rate stays in place when None.
        """
        app_id = air_id if app_id is None else app_id
        assert len(cpu_ids) == len(traces), f"{fen_id}: {len(traces)} traces for {len(cpu_ids)} CPUs"
        assert len(cpu_ids) > 0, f"{fen_id}: dispatch without CPUs"
        for cpu_id in cpu_ids:
            if self.holder(cpu_id) != app_id:
                raise CpuNotReserved(f"{fen_id}: CPU {cpu_id} is reserved by {self.holder(cpu_id)}, not {app_id}")
            if self.platform.cpu(cpu_id).run is not None:
                raise CpuBusy(f"{fen_id}: CPU {cpu_id} is still running another trace")

        context = FenContext(
            context_id=len(self.contexts),
            fen_id=fen_id,
            air_id=air_id,
            app_id=app_id,
            cpu_ids=tuple(cpu_ids),
            start=self.kernel.now,
            running=len(cpu_ids),
        )
        self.contexts[context.context_id] = context
        self._record(context)
        for cpu_id, trace in zip(cpu_ids, traces):
            if hit_rate is not None:
                self.platform.cpu(cpu_id).cache.set_hit_rate(hit_rate)
            self.platform.execute_trace(cpu_id, trace, owner=context.context_id)
        return context.context_id

    def _on_trace_done(self, cpu_id: int, run: TraceRun):
        context = self.contexts.get(run.owner)
        if context is None:
            return
        context.running -= 1
        if context.running == 0:
            self.kernel.schedule(self.kernel.now, EventKind.FEN_COMPLETE, context.context_id)

    def _on_fen_complete(self, event: Event):
        self.notify_finished(event.payload)

    def notify_finished(self, context_id: int):
        if context_id not in self.contexts:
            raise UnknownContext(f"context {context_id} was never dispatched")
        context = self.contexts[context_id]
        if context.status is ContextStatus.EXECUTION_FINISHED:
            raise AlreadyFinished(f"context {context_id} ({context.fen_id}) already finished at {context.end} ns")
        assert context.running == 0, f"context {context_id} still has {context.running} CPUs running"
        context.status = ContextStatus.EXECUTION_FINISHED
        context.end = self.kernel.now
        self._record(context)
        for callback in self._finished_callbacks:
            callback(context)

    def _record(self, context: FenContext):
        self.log.append(
            ContextRecord(
                time_ns=self.kernel.now,
                context_id=context.context_id,
                app_id=context.app_id,
                fen_id=context.fen_id,
                cpus=context.cpu_ids,
                status=context.status.value,
            )
        )
