import dataclasses
import logging
from typing import Callable, Dict, List, Optional, Sequence

from rasim.fel.metrics import AllocationRecord
from rasim.rel.demand import (
    AlreadyReserved,
    CandidateSet,
    Claim,
    ClaimNotLive,
    CpuStillBusy,
    Demand,
    ResourceSnapshot,
)
from rasim.rel.policy import Curves, Grants, apply_starvation_guard, get_policy

logger = logging.getLogger(__name__)


def get_resource(demand: Demand, snapshot: ResourceSnapshot) -> CandidateSet:
    """Every CPU that is unreserved and, if the demand sets ``max_load``, not loaded above it."""
    return CandidateSet(
        tuple(
            entry.cpu_id
            for entry in sorted(snapshot.entries, key=lambda e: e.cpu_id)
            if entry.reserved_by is None and (demand.max_load is None or entry.recent_load <= demand.max_load)
        )
    )


def allocate_batch(
    policy: str,
    demands: Sequence[Demand],
    snapshot: ResourceSnapshot,
    curves: Curves,
    claim_cap: int,
) -> Grants:
    """CPU counts for requests that arrived at the same timestamp.

    Each demand is bounded by its own candidate set, so a load ceiling caps
    the grant before the policy sees it. Demands whose candidates fall short
    of ``min_cpus`` get 0 and take no part in the policy call.
    """
    assert len(demands) >= 1, "allocation batch is empty"
    free = len(snapshot.free_cpus())
    grants: Grants = {d.app_id: 0 for d in demands}
    bounded = []
    for demand in demands:
        reachable = len(get_resource(demand, snapshot))
        if reachable >= demand.min_cpus:
            bounded.append(dataclasses.replace(demand, max_cpus=min(demand.max_cpus, reachable)))
    if bounded:
        chosen = get_policy(policy)(curves, bounded, free, claim_cap)
        grants.update(apply_starvation_guard(bounded, chosen, free))
    assert sum(grants.values()) <= free, f"policy {policy} granted {grants} with only {free} free CPUs"
    return grants


class ResourceManager:
    """
    Centralised allocator. Keeps the reservation owner of every CPU and the live claims.

    Args:
        num_cpus: Platform size.
        claim_cap: Largest claim one application may hold.
        policy: Name of the allocation policy.
        curves: Scalability and standalone-load profiles of the applications.
        cpu_busy: Tells whether a CPU is still executing a trace; consulted on release.
    """

    def __init__(
        self,
        num_cpus: int,
        claim_cap: int,
        policy: str = "scalability",
        curves: Optional[Curves] = None,
        cpu_busy: Optional[Callable[[int], bool]] = None,
    ):
        get_policy(policy)
        self.num_cpus = num_cpus
        self.claim_cap = claim_cap
        self.policy = policy
        self.curves = curves if curves is not None else Curves()
        self.cpu_busy = cpu_busy if cpu_busy is not None else (lambda cpu_id: False)
        self.reserved_by: List[Optional[str]] = [None] * num_cpus
        self.live_claims: Dict[int, Claim] = {}
        self.claims: List[Claim] = []
        self.allocation_log: List[AllocationRecord] = []
        # Bumped on every reservation change, lets observers skip unchanged states
        self.version = 0

    def get_resource(self, demand: Demand, snapshot: ResourceSnapshot) -> CandidateSet:
        return get_resource(demand, snapshot)

    def reserve_resource(
        self,
        candidates: CandidateSet,
        demand: Demand,
        grant_count: int,
        now: int,
        iteration: int = 0,
        batch_size: int = 1,
    ) -> Claim:
        """Reserve the first ``grant_count`` candidates, or nothing if that falls short of ``min_cpus``."""
        assert demand.app_id is not None, "demand is not bound to an application"
        assert grant_count <= self.claim_cap, f"grant {grant_count} exceeds the claim cap {self.claim_cap}"
        grant_count = min(grant_count, len(candidates))
        resources = candidates.resources[:grant_count] if grant_count >= demand.min_cpus else ()
        for cpu_id in resources:
            if self.reserved_by[cpu_id] is not None:
                raise AlreadyReserved(f"CPU {cpu_id} is already reserved by {self.reserved_by[cpu_id]}")
        claim = Claim(
            app_id=demand.app_id,
            resources=tuple(resources),
            granted_at=now,
            iteration=iteration,
            demand=demand,
            candidates=candidates,
            granted_count=grant_count,
            claim_id=len(self.claims),
            live=len(resources) > 0,
        )
        self.claims.append(claim)
        for cpu_id in resources:
            self.reserved_by[cpu_id] = demand.app_id
        if claim.live:
            self.live_claims[claim.claim_id] = claim
            self.version += 1
        else:
            logger.info("[%s] %s denied: %d CPUs available, at least %d needed", now, demand.app_id, grant_count, demand.min_cpus)
        self.allocation_log.append(
            AllocationRecord(
                time_ns=now,
                app_id=demand.app_id,
                requested_min=demand.min_cpus,
                requested_max=demand.max_cpus,
                granted=claim.size,
                cpus=claim.resources,
                batch_size=batch_size,
            )
        )
        return claim

    def release_resource(self, claim: Claim):
        if claim.is_empty:
            claim.live = False
            return
        if not claim.live or claim.claim_id not in self.live_claims:
            raise ClaimNotLive(f"claim {claim.claim_id} of {claim.app_id} was already released")
        for cpu_id in claim.resources:
            if self.cpu_busy(cpu_id):
                raise CpuStillBusy(f"CPU {cpu_id} of claim {claim.claim_id} ({claim.app_id}) is still executing")
        for cpu_id in claim.resources:
            assert self.reserved_by[cpu_id] == claim.app_id, f"CPU {cpu_id} not reserved by {claim.app_id}"
            self.reserved_by[cpu_id] = None
        claim.live = False
        del self.live_claims[claim.claim_id]
        self.version += 1

    def allocate_batch(self, demands: Sequence[Demand], snapshot: ResourceSnapshot) -> Grants:
        return allocate_batch(self.policy, demands, snapshot, self.curves, self.claim_cap)

    def serve(
        self,
        demands: Sequence[Demand],
        snapshot: ResourceSnapshot,
        now: int,
        iterations: Optional[Dict[str, int]] = None,
    ) -> Dict[str, Claim]:
        """Allocate a batch and reserve claims one application at a time.

        The application with the fewest candidates reserves first, then app_id
        order. Candidates are recomputed before each reservation so later
        applications only see CPUs that are still unreserved.
        """
        grants = self.allocate_batch(demands, snapshot)
        claims: Dict[str, Claim] = {}
        order = sorted(demands, key=lambda d: (len(self.get_resource(d, snapshot)), d.app_id))
        for demand in order:
            current = ResourceSnapshot(
                taken_at=snapshot.taken_at,
                entries=tuple(
                    dataclasses.replace(e, reserved_by=self.reserved_by[e.cpu_id])
                    for e in snapshot.entries
                ),
            )
            candidates = self.get_resource(demand, current)
            claims[demand.app_id] = self.reserve_resource(
                candidates,
                demand,
                grants[demand.app_id],
                now,
                iteration=(iterations or {}).get(demand.app_id, 0),
                batch_size=len(demands),
            )
        return claims

    def holder(self, cpu_id: int) -> Optional[str]:
        return self.reserved_by[cpu_id]
