"""Resource-aware executor: walks one application's AIR once per iteration.

The executor never touches the platform itself. Each step consumes one event
and returns the actions the simulator has to carry out on its behalf.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Union

from rasim.air.graph import AirGraph, NodeKind, select_edge
from rasim.errors import SimulationError
from rasim.rel.demand import Claim, Demand


class ProtocolViolation(SimulationError):
    pass


class Phase(Enum):
    IDLE = "idle"
    WAIT_CLAIM = "wait_claim"
    WAIT_FEN = "wait_fen"


@dataclass(frozen=True)
class IterationTrigger:
    time: int


@dataclass(frozen=True)
class ClaimGranted:
    claim: Claim


@dataclass(frozen=True)
class FenComplete:
    context_id: int


ExecutorEvent = Union[IterationTrigger, ClaimGranted, FenComplete]


@dataclass(frozen=True)
class RequestResources:
    demand: Demand


@dataclass(frozen=True)
class DispatchFen:
    fen_id: str
    trace_ref: str
    claim: Claim


@dataclass(frozen=True)
class Release:
    claim: Claim


@dataclass(frozen=True)
class IterationDone:
    iteration: int
    claim_size: int


@dataclass(frozen=True)
class SkipIteration:
    iteration: int
    trigger_time: int


Action = Union[RequestResources, DispatchFen, Release, IterationDone, SkipIteration]


@dataclass
class ExecutorState:
    app_id: str
    air: AirGraph
    current_node: Optional[str] = None
    live_claim: Optional[Claim] = None
    iteration: int = 0
    phase: Phase = Phase.IDLE
    # Size granted at the start of the iteration, routes every edge until the iteration ends
    claim_size: int = 0
    awaited_context: Optional[int] = None
    skipped: int = 0
    history: List[str] = field(default_factory=list)


def _advance(state: ExecutorState, node_id: str, actions: List[Action]):
    """Walk from ``node_id`` until the executor has to park or the iteration ends."""
    while True:
        state.current_node = node_id
        state.history.append(node_id)
        node = state.air.node(node_id)
        if node.kind is NodeKind.GET_RESOURCE:
            if state.live_claim is not None:
                raise ProtocolViolation(f"{state.app_id}: {node_id} acquires while claim {state.live_claim.claim_id} is live")
            assert node.demand is not None
            state.phase = Phase.WAIT_CLAIM
            actions.append(RequestResources(node.demand.for_app(state.app_id)))
            return
        if node.kind is NodeKind.FEN and state.claim_size > 0:
            assert node.trace_ref is not None and state.live_claim is not None
            state.phase = Phase.WAIT_FEN
            actions.append(DispatchFen(node.node_id, node.trace_ref, state.live_claim))
            return
        if node.kind is NodeKind.RELEASE_RESOURCE:
            if state.live_claim is not None:
                actions.append(Release(state.live_claim))
                state.live_claim = None
        if not state.air.out_edges(node_id):
            actions.append(IterationDone(state.iteration, state.claim_size))
            state.iteration += 1
            state.current_node = None
            state.phase = Phase.IDLE
            state.claim_size = 0
            return
        node_id = select_edge(state.air, node_id, state.claim_size)


def executor_step(state: ExecutorState, event: ExecutorEvent) -> List[Action]:
    actions: List[Action] = []
    if isinstance(event, IterationTrigger):
        if state.phase is not Phase.IDLE:
            # run-to-completion: the running iteration keeps its CPUs, this one is dropped
            state.skipped += 1
            return [SkipIteration(state.iteration, event.time)]
        state.history = []
        _advance(state, state.air.entry_node, actions)
        return actions

    if isinstance(event, ClaimGranted):
        if state.phase is not Phase.WAIT_CLAIM:
            raise ProtocolViolation(f"{state.app_id}: claim granted while {state.phase.value} at {state.current_node}")
        assert state.current_node is not None
        claim = event.claim
        state.claim_size = claim.size
        state.live_claim = claim
        _advance(state, select_edge(state.air, state.current_node, claim.size), actions)
        return actions

    if isinstance(event, FenComplete):
        if state.phase is not Phase.WAIT_FEN:
            raise ProtocolViolation(f"{state.app_id}: FEN completion while {state.phase.value} at {state.current_node}")
        if state.awaited_context is not None and event.context_id != state.awaited_context:
            raise ProtocolViolation(
                f"{state.app_id}: completion of context {event.context_id}, waiting for {state.awaited_context}"
            )
        assert state.current_node is not None
        state.awaited_context = None
        _advance(state, select_edge(state.air, state.current_node, state.claim_size), actions)
        return actions

    raise ProtocolViolation(f"{state.app_id}: unexpected event {event!r}")
