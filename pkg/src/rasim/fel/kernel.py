"""Discrete-event kernel of the functional execution layer.

Time is kept as integer nanoseconds since simulation start. Events are ordered
by ``(time, seq)`` where ``seq`` is assigned at insertion, so simultaneous
events are processed in the order they were scheduled.
"""

import heapq
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional

from rasim.errors import ConfigError, SimulationError

logger = logging.getLogger(__name__)

NS_PER_SECOND = 1_000_000_000
NS_PER_MS = 1_000_000

SimTime = int


class EventInPast(SimulationError):
    pass


def ns_per_cycle(freq_hz: int) -> int:
    """Length of one clock cycle in nanoseconds.

    Only frequencies that divide 10^9 are accepted, so cycle counts and
    nanoseconds convert into each other without rounding.
    """
    if freq_hz <= 0 or NS_PER_SECOND % freq_hz != 0:
        raise ConfigError(f"freq_hz={freq_hz} must be a positive divisor of {NS_PER_SECOND}")
    return NS_PER_SECOND // freq_hz


def ms_to_ns(ms: int | float) -> SimTime:
    return int(round(ms * NS_PER_MS))


def ns_to_cycles(ns: SimTime, freq_hz: int) -> int:
    return ns * freq_hz // NS_PER_SECOND


class EventKind(Enum):
    ITERATION_TRIGGER = "iteration_trigger"  # Period boundary of an application.
    REQUEST_ARRIVAL = "request_arrival"  # A get_resource request reaches the resource manager.
    ALLOCATION_ROUND = "allocation_round"  # Serve every request that arrived at this timestamp.
    SEGMENT_READY = "segment_ready"  # Compute phase of a trace segment ended.
    LINE_FILL = "line_fill"  # A CPU posts a cache-line fill to the shared bus.
    BUS_GRANT = "bus_grant"  # The shared bus arbitrates among pending line fills.
    TRANSFER_DONE = "transfer_done"  # A line fill completed, the requesting CPU resumes.
    TRACE_DONE = "trace_done"  # A CPU finished its trace.
    FEN_COMPLETE = "fen_complete"  # All CPUs of an FEN context finished.


@dataclass(order=True)
class Event:
    time: SimTime
    seq: int
    kind: EventKind = field(compare=False)
    payload: Any = field(default=None, compare=False)

    def __str__(self):
        return f"Event(time={self.time}, seq={self.seq}, kind={self.kind.value})"


class EventQueue:
    """Binary heap of events ordered by ``(time, seq)``."""

    def __init__(self):
        self._event_queue: List[Event] = []

    def add_event(self, event: Event):
        heapq.heappush(self._event_queue, event)

    def next(self) -> Event:
        return heapq.heappop(self._event_queue)

    def peek(self) -> Optional[Event]:
        if len(self._event_queue) == 0:
            return None
        return self._event_queue[0]

    def __len__(self) -> int:
        return len(self._event_queue)


Handler = Callable[[Event], None]


class Kernel:
    """Single-threaded event loop. One instance per simulation run."""

    def __init__(self):
        self.now: SimTime = 0
        self.processed = 0
        self._seq = 0
        self._event_queue = EventQueue()
        self._handlers: Dict[EventKind, Handler] = {}
        self._observers: List[Handler] = []

    def register(self, kind: EventKind, handler: Handler):
        assert kind not in self._handlers, f"handler for {kind} already registered"
        self._handlers[kind] = handler

    def add_observer(self, observer: Handler):
        """Observers run after the handler of every processed event."""
        self._observers.append(observer)

    def schedule(self, time: SimTime, kind: EventKind, payload: Any = None) -> Event:
        if time < self.now:
            raise EventInPast(f"{kind.value} scheduled at {time} ns, current time is {self.now} ns")
        event = Event(time=time, seq=self._seq, kind=kind, payload=payload)
        self._seq += 1
        self._event_queue.add_event(event)
        return event

    def pending(self) -> int:
        return len(self._event_queue)

    def next_time(self) -> Optional[SimTime]:
        event = self._event_queue.peek()
        return None if event is None else event.time

    def run_until(self, t_end: SimTime) -> int:
        """Process every event with ``time <= t_end``. Returns the number processed."""
        n_before = self.processed
        while True:
            event = self._event_queue.peek()
            if event is None or event.time > t_end:
                break
            self._event_queue.next()
            if event.time < self.now:
                raise EventInPast(f"{event} dequeued after current time {self.now} ns")
            self.now = event.time
            handler = self._handlers.get(event.kind)
            if handler is None:
                raise SimulationError(f"No handler registered for {event.kind.value}")
            handler(event)
            self.processed += 1
            for observer in self._observers:
                observer(event)
        self.now = max(self.now, t_end)
        logger.debug("[%s] kernel stopped after %d events", self.now, self.processed - n_before)
        return self.processed - n_before
