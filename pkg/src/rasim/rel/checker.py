import logging
from typing import List

from rasim.fel.kernel import Event, EventKind
from rasim.fel.platform import FunctionalLayer
from rasim.fel_interface.execution_controller import ContextStatus, ExecutionController
from rasim.rel.resource_manager import ResourceManager

logger = logging.getLogger(__name__)

# Only these events can change reservations or start contexts
_WATCHED = {EventKind.ALLOCATION_ROUND, EventKind.FEN_COMPLETE, EventKind.ITERATION_TRIGGER}


class ClaimInvariantChecker:
    """Kernel observer that checks the claim bookkeeping after every event.

    Violations are collected as messages, they do not stop the run.
    """

    def __init__(self, rm: ResourceManager, controller: ExecutionController, platform: FunctionalLayer):
        self.rm = rm
        self.controller = controller
        self.platform = platform
        self.violations: List[str] = []
        self._seen_claims = 0
        self._seen_version = -1
        self._seen_contexts = 0

    def _fail(self, time: int, message: str):
        logger.warning("[%s] invariant violated: %s", time, message)
        self.violations.append(f"{time}: {message}")

    def __call__(self, event: Event):
        if event.kind not in _WATCHED:
            return
        t = event.time
        if self.rm.version != self._seen_version:
            self._seen_version = self.rm.version
            self._check_exclusivity(t)
        if len(self.rm.claims) != self._seen_claims:
            for claim in self.rm.claims[self._seen_claims :]:
                self._check_claim(t, claim)
            self._seen_claims = len(self.rm.claims)
        if len(self.controller.contexts) != self._seen_contexts:
            self._seen_contexts = len(self.controller.contexts)
            self._check_contexts(t)

    def _check_exclusivity(self, t: int):
        owners = {}
        for claim in self.rm.live_claims.values():
            for cpu_id in claim.resources:
                if cpu_id in owners:
                    self._fail(t, f"CPU {cpu_id} in claims {owners[cpu_id]} and {claim.claim_id}")
                owners[cpu_id] = claim.claim_id
                if self.rm.reserved_by[cpu_id] != claim.app_id:
                    self._fail(t, f"CPU {cpu_id} of {claim.app_id} shows owner {self.rm.reserved_by[cpu_id]}")
        for cpu_id, owner in enumerate(self.rm.reserved_by):
            if owner is not None and cpu_id not in owners:
                self._fail(t, f"CPU {cpu_id} reserved by {owner} outside any live claim")

    def _check_claim(self, t: int, claim):
        demand = claim.demand
        if not set(claim.resources) <= set(claim.candidates.resources):
            self._fail(t, f"claim {claim.claim_id} {claim.resources} not within candidates {claim.candidates.resources}")
        if claim.size > self.rm.claim_cap:
            self._fail(t, f"claim {claim.claim_id} has {claim.size} CPUs, cap is {self.rm.claim_cap}")
        if demand is None:
            return
        hi = min(demand.max_cpus, self.rm.claim_cap)
        if claim.size != 0 and not demand.min_cpus <= claim.size <= hi:
            self._fail(t, f"claim {claim.claim_id} size {claim.size} outside [{demand.min_cpus}, {hi}]")
        if claim.is_empty != (claim.granted_count < demand.min_cpus):
            self._fail(t, f"claim {claim.claim_id} emptiness disagrees with grant {claim.granted_count}")

    def _check_contexts(self, t: int):
        in_use = {}
        for context in self.controller.contexts.values():
            if context.status is not ContextStatus.EXECUTION_STARTED:
                continue
            for cpu_id in context.cpu_ids:
                if cpu_id in in_use:
                    self._fail(t, f"CPU {cpu_id} shared by contexts {in_use[cpu_id]} and {context.context_id}")
                in_use[cpu_id] = context.context_id

    def finalize(self) -> List[str]:
        """Check that every finished context ran without interruption on each of its CPUs."""
        for context in self.controller.contexts.values():
            if context.end is None or context.end == context.start:
                continue
            for cpu_id in context.cpu_ids:
                pieces = [
                    (start, end)
                    for start, end in self.platform.cpu(cpu_id).intervals
                    if start < context.end and (end is None or end > context.start)
                ]
                if len(pieces) != 1 or pieces[0][0] != context.start:
                    self._fail(
                        context.end,
                        f"context {context.context_id} on CPU {cpu_id} ran in {len(pieces)} pieces {pieces}",
                    )
        return self.violations
