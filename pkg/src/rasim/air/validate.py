import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

import networkx as nx

from rasim.air.graph import AirEdge, AirGraph, GuardKind, NodeKind

logger = logging.getLogger(__name__)


class ViolationKind(Enum):
    DANGLING_EDGE = "DanglingEdge"
    MISSING_ENTRY = "MissingEntry"
    ENTRY_HAS_INCOMING = "EntryHasIncoming"
    DUPLICATE_NODE = "DuplicateNode"
    CYCLE_DETECTED = "CycleDetected"
    UNBALANCED_ACQUISITION = "UnbalancedAcquisition"
    NESTED_ACQUISITION = "NestedAcquisition"
    RELEASE_WITHOUT_CLAIM = "ReleaseWithoutClaim"
    FEN_OUTSIDE_CLAIM = "FenOutsideClaim"
    OVERLAPPING_GUARDS = "OverlappingGuards"
    MISSING_DEFAULT = "MissingDefault"
    ALWAYS_NOT_SOLE = "AlwaysNotSole"
    MULTIPLE_DEFAULTS = "MultipleDefaults"
    INVALID_GUARD = "InvalidGuard"
    UNREACHABLE_NODE = "UnreachableNode"
    UNREACHABLE_BRANCH = "UnreachableBranch"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    message: str
    node_id: Optional[str] = None
    claim_size: Optional[int] = None

    def __str__(self):
        return f"{self.kind.value}: {self.message}"


@dataclass
class ValidationReport:
    graph_id: str
    violations: List[Violation] = field(default_factory=list)
    # Claim sizes under which every FEN can be reached; filled when the graph is structurally sound
    fen_claim_sizes: Dict[str, Set[int]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return len(self.violations) == 0

    def kinds(self) -> Set[ViolationKind]:
        return {v.kind for v in self.violations}

    def add(self, kind: ViolationKind, message: str, node_id: Optional[str] = None, claim_size: Optional[int] = None):
        self.violations.append(Violation(kind, message, node_id, claim_size))

    def __str__(self):
        if self.ok:
            return f"{self.graph_id}: valid"
        return f"{self.graph_id}: " + "; ".join(str(v) for v in self.violations)


def _check_structure(graph: AirGraph, report: ValidationReport) -> bool:
    ids = Counter(node.node_id for node in graph.nodes)
    for node_id, count in sorted(ids.items()):
        if count > 1:
            report.add(ViolationKind.DUPLICATE_NODE, f"node {node_id} defined {count} times", node_id)
    sound = True
    if graph.entry_node not in ids:
        report.add(ViolationKind.MISSING_ENTRY, f"entry node {graph.entry_node} does not exist")
        sound = False
    for edge in graph.edges:
        for end in (edge.source, edge.target):
            if end not in ids:
                report.add(ViolationKind.DANGLING_EDGE, f"edge {edge.source}->{edge.target} references {end}", end)
                sound = False
    if any(edge.target == graph.entry_node for edge in graph.edges):
        report.add(ViolationKind.ENTRY_HAS_INCOMING, f"entry node {graph.entry_node} has incoming edges")
    if not sound:
        return False

    g = graph.to_networkx()
    if not nx.is_directed_acyclic_graph(g):
        cycle = nx.find_cycle(g)
        path = " -> ".join([u for u, *_ in cycle] + [cycle[0][0]])
        report.add(ViolationKind.CYCLE_DETECTED, f"cycle {path}", cycle[0][0])
        sound = False
    reachable = nx.descendants(g, graph.entry_node) | {graph.entry_node}
    for node in graph.nodes:
        if node.node_id not in reachable:
            report.add(ViolationKind.UNREACHABLE_NODE, f"node {node.node_id} cannot be reached from the entry", node.node_id)
    return sound and ids.most_common(1)[0][1] == 1


def _check_guards(graph: AirGraph, report: ValidationReport, num_cpus: int):
    for node in graph.nodes:
        edges = graph.out_edges(node.node_id)
        if not edges:
            continue
        for edge in edges:
            g = edge.guard
            if g.lo < 0 or g.hi < 0 or (g.kind is GuardKind.IN and g.lo > g.hi):
                report.add(ViolationKind.INVALID_GUARD, f"{node.node_id}->{edge.target} has guard {g}", node.node_id)
        kinds = [e.guard.kind for e in edges]
        if GuardKind.ALWAYS in kinds and len(edges) > 1:
            report.add(ViolationKind.ALWAYS_NOT_SOLE, f"{node.node_id} mixes 'always' with other edges", node.node_id)
        n_defaults = kinds.count(GuardKind.DEFAULT)
        if n_defaults > 1:
            report.add(ViolationKind.MULTIPLE_DEFAULTS, f"{node.node_id} has {n_defaults} default edges", node.node_id)
        uncovered = []
        for size in range(num_cpus + 1):
            matched = [e for e in edges if e.guard.matches(size)]
            if len(matched) > 1:
                report.add(
                    ViolationKind.OVERLAPPING_GUARDS,
                    f"{node.node_id}: {', '.join(str(e.guard) for e in matched)} all match claim size {size}",
                    node.node_id,
                    size,
                )
            elif not matched:
                uncovered.append(size)
        if uncovered and n_defaults == 0:
            report.add(
                ViolationKind.MISSING_DEFAULT,
                f"{node.node_id}: no guard matches claim sizes {uncovered} and there is no default edge",
                node.node_id,
            )


def _matched_sizes(edges: List[AirEdge], sizes: FrozenSet[int]) -> Dict[int, FrozenSet[int]]:
    explicit = set()
    matched: Dict[int, FrozenSet[int]] = {}
    for i, edge in enumerate(edges):
        if edge.guard.is_explicit:
            hit = frozenset(n for n in sizes if edge.guard.matches(n))
            matched[i] = hit
            explicit |= hit
    for i, edge in enumerate(edges):
        if not edge.guard.is_explicit:
            matched[i] = frozenset(sizes - explicit)
    return matched


def _check_paths(graph: AirGraph, report: ValidationReport, claim_cap: int):
    """Walk every path from the entry, tracking whether a claim is live and which claim sizes are possible."""
    State = Tuple[str, bool, FrozenSet[int]]
    seen: Set[State] = set()
    reported: Set[Tuple[ViolationKind, str]] = set()
    edge_hits: Dict[Tuple[str, int], Set[int]] = defaultdict(set)
    fen_sizes: Dict[str, Set[int]] = defaultdict(set)

    def flag(kind: ViolationKind, node_id: str, message: str):
        if (kind, node_id) not in reported:
            reported.add((kind, node_id))
            report.add(kind, message, node_id)

    stack: List[State] = [(graph.entry_node, False, frozenset({0}))]
    while stack:
        state = stack.pop()
        if state in seen:
            continue
        seen.add(state)
        node_id, live, sizes = state
        node = graph.node(node_id)
        if node.kind is NodeKind.GET_RESOURCE:
            if live:
                flag(ViolationKind.NESTED_ACQUISITION, node_id, f"{node_id} acquires while a claim is live")
            assert node.demand is not None
            hi = min(node.demand.max_cpus, claim_cap)
            live, sizes = True, frozenset({0} | set(range(node.demand.min_cpus, hi + 1)))
        elif node.kind is NodeKind.RELEASE_RESOURCE:
            if not live:
                flag(ViolationKind.RELEASE_WITHOUT_CLAIM, node_id, f"{node_id} releases without a live claim")
            live = False
        else:
            if not live:
                flag(ViolationKind.FEN_OUTSIDE_CLAIM, node_id, f"{node_id} runs outside of any claim")
            fen_sizes[node_id] |= sizes - {0}

        edges = graph.out_edges(node_id)
        if not edges:
            if live:
                flag(ViolationKind.UNBALANCED_ACQUISITION, node_id, f"path ends at {node_id} with a live claim")
            continue
        for i, hit in _matched_sizes(edges, sizes).items():
            edge_hits[(node_id, i)] |= hit
            if hit:
                stack.append((edges[i].target, live, hit))

    visited_nodes = {node_id for node_id, _, _ in seen}
    for node_id in sorted(visited_nodes):
        for i, edge in enumerate(graph.out_edges(node_id)):
            if not edge_hits[(node_id, i)]:
                report.add(
                    ViolationKind.UNREACHABLE_BRANCH,
                    f"{node_id}->{edge.target} ({edge.guard}) matches no reachable claim size",
                    node_id,
                )
    report.fen_claim_sizes = dict(fen_sizes)


def validate_air(graph: AirGraph, num_cpus: int = 6, claim_cap: Optional[int] = None) -> ValidationReport:
    """
    Check an AIR against the rules a simulation relies on. Violations are returned as data.

    Args:
        graph: The parsed AIR.
        num_cpus: Platform size; guards are checked over claim sizes ``0..num_cpus``.
        claim_cap: Largest claim a single application may hold. Defaults to ``num_cpus - 1``.

    Returns:
        A report whose ``violations`` list is empty iff the graph can be simulated.
    """
    if claim_cap is None:
        claim_cap = max(1, num_cpus - 1)
    report = ValidationReport(graph_id=graph.graph_id)
    sound = _check_structure(graph, report)
    _check_guards(graph, report, num_cpus)
    if sound:
        _check_paths(graph, report, claim_cap)
    if not report.ok:
        logger.debug("AIR %s rejected: %s", graph.graph_id, report)
    return report
