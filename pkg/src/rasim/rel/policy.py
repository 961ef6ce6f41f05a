"""Allocation policies of the resource manager.

A policy turns a batch of simultaneous demands into a CPU count per
application. It does not pick CPUs; the resource manager reserves the
lowest-numbered candidates afterwards.
"""

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Sequence, Tuple

from rasim.rel.demand import Demand, MissingCurve, ScalabilityCurve, StandaloneLoadCurve

Grants = Dict[str, int]


@dataclass(frozen=True)
class Curves:
    """Per-application profiles handed to the resource manager at simulation start."""

    scalability: Mapping[str, ScalabilityCurve] = field(default_factory=dict)
    standalone_load: Mapping[str, StandaloneLoadCurve] = field(default_factory=dict)


def _upper(demand: Demand, claim_cap: int, free: int) -> int:
    return max(0, min(demand.max_cpus, claim_cap, free))


def _by_app_id(demands: Sequence[Demand]) -> List[Demand]:
    return sorted(demands, key=lambda d: d.app_id)


def policy_scalability(
    curves: Mapping[str, ScalabilityCurve],
    demands: Sequence[Demand],
    free: int,
    claim_cap: int,
) -> Grants:
    """
    Maximise the summed speedup of the batch by exhaustive enumeration.

    Each application gets 0 or a count in ``[min_cpus, min(max_cpus, claim_cap)]``
    and the counts add up to at most ``free``. Among equally good vectors the
    one with the smallest spread wins, then the lexicographically smallest in
    app_id order.
    """
    ordered = _by_app_id(demands)
    for demand in ordered:
        if demand.app_id not in curves:
            raise MissingCurve(f"no scalability curve for {demand.app_id}")
    options = [[0] + list(range(d.min_cpus, _upper(d, claim_cap, free) + 1)) for d in ordered]

    best_key = None
    best: Tuple[int, ...] = tuple(0 for _ in ordered)
    for vector in itertools.product(*options):
        if sum(vector) > free:
            continue
        objective = sum((curves[d.app_id].at(n) for d, n in zip(ordered, vector)), Fraction(0))
        key = (-objective, max(vector) - min(vector), vector)
        if best_key is None or key < best_key:
            best_key, best = key, vector
    return {d.app_id: n for d, n in zip(ordered, best)}


def _ranked_with_holdback(ranked: Sequence[Demand], free: int, claim_cap: int) -> Grants:
    """Serve ``ranked`` in order, holding one CPU back for every application still to be served."""
    grants: Grants = {}
    remaining = free
    for i, demand in enumerate(ranked):
        still_to_serve = len(ranked) - i - 1
        grant = min(demand.max_cpus, claim_cap, remaining - still_to_serve)
        grant = max(grant, min(1, remaining))
        if grant < demand.min_cpus:
            grant = 0
        grants[demand.app_id] = grant
        remaining -= grant
    return grants


def policy_load(
    loads: Mapping[str, StandaloneLoadCurve],
    demands: Sequence[Demand],
    free: int,
    claim_cap: int,
) -> Grants:
    """Heavier standalone load at the maximum requested count gets more CPUs."""
    for demand in demands:
        if demand.app_id not in loads:
            raise MissingCurve(f"no standalone load curve for {demand.app_id}")
    ranked = sorted(demands, key=lambda d: (-loads[d.app_id].at(d.max_cpus), d.app_id))
    return _ranked_with_holdback(ranked, free, claim_cap)


def policy_firstfit(demands: Sequence[Demand], free: int, claim_cap: int) -> Grants:
    """Arrival order, as much as each demand allows."""
    return _ranked_with_holdback(list(demands), free, claim_cap)


Policy = Callable[[Curves, Sequence[Demand], int, int], Grants]

POLICIES: Dict[str, Policy] = {
    "scalability": lambda curves, demands, free, cap: policy_scalability(curves.scalability, demands, free, cap),
    "load": lambda curves, demands, free, cap: policy_load(curves.standalone_load, demands, free, cap),
    "firstfit": lambda curves, demands, free, cap: policy_firstfit(demands, free, cap),
}


def get_policy(name: str) -> Policy:
    if name not in POLICIES:
        raise KeyError(f"unknown allocation policy {name!r}, choose one of {sorted(POLICIES)}")
    return POLICIES[name]


def apply_starvation_guard(demands: Sequence[Demand], grants: Grants, free: int) -> Grants:
    """Give every starved single-CPU-capable application one CPU when there are enough CPUs for everyone.

    A CPU is taken from the largest grant (first in app_id order on ties)
    when the free pool is exhausted.
    """
    if free < len(demands):
        return grants
    grants = dict(grants)
    for demand in _by_app_id(demands):
        if demand.min_cpus != 1 or grants[demand.app_id] > 0:
            continue
        if sum(grants.values()) >= free:
            donor = min(
                (d for d in _by_app_id(demands) if grants[d.app_id] > d.min_cpus),
                key=lambda d: -grants[d.app_id],
                default=None,
            )
            if donor is None:
                continue
            grants[donor.app_id] -= 1
        grants[demand.app_id] = 1
    return grants
