"""Application Intermediate Representation.

An AIR is an acyclic control-flow graph with two families of nodes: resource
aware nodes (``get_resource`` and ``release_resource``) and functional nodes
(``fen``) carrying a trace reference. Edges are guarded by predicates over
the size of the claim the application holds, so one traversal of the graph
adapts to the number of CPUs it was granted.
"""

import json
import sys
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional

import networkx as nx

from rasim.errors import ConfigError, SimulationError
from rasim.rel.demand import Demand


class AirSyntaxError(ConfigError):
    pass


class UnknownNodeKind(ConfigError):
    pass


class NoMatchingEdge(SimulationError):
    pass


class NodeKind(Enum):
    GET_RESOURCE = "get_resource"
    RELEASE_RESOURCE = "release_resource"
    FEN = "fen"


class GuardKind(Enum):
    ALWAYS = "always"
    DEFAULT = "default"
    EQ = "eq"
    GE = "ge"
    IN = "in"


@dataclass(frozen=True)
class Guard:
    kind: GuardKind
    lo: int = 0
    hi: int = 0

    @classmethod
    def always(cls) -> "Guard":
        return cls(GuardKind.ALWAYS)

    @classmethod
    def default(cls) -> "Guard":
        return cls(GuardKind.DEFAULT)

    @classmethod
    def claim_eq(cls, k: int) -> "Guard":
        return cls(GuardKind.EQ, k, k)

    @classmethod
    def claim_ge(cls, k: int) -> "Guard":
        return cls(GuardKind.GE, k, k)

    @classmethod
    def claim_in(cls, lo: int, hi: int) -> "Guard":
        return cls(GuardKind.IN, lo, hi)

    @property
    def is_explicit(self) -> bool:
        return self.kind is not GuardKind.DEFAULT

    def matches(self, claim_size: int) -> bool:
        """Whether the guard holds for ``claim_size``. ``default`` never matches on its own."""
        if self.kind is GuardKind.ALWAYS:
            return True
        if self.kind is GuardKind.EQ:
            return claim_size == self.lo
        if self.kind is GuardKind.GE:
            return claim_size >= self.lo
        if self.kind is GuardKind.IN:
            return self.lo <= claim_size <= self.hi
        return False

    def to_json(self) -> Any:
        if self.kind in (GuardKind.ALWAYS, GuardKind.DEFAULT):
            return self.kind.value
        if self.kind is GuardKind.IN:
            return {"in": [self.lo, self.hi]}
        return {self.kind.value: self.lo}

    def __str__(self):
        if self.kind is GuardKind.EQ:
            return f"claim_eq({self.lo})"
        if self.kind is GuardKind.GE:
            return f"claim_ge({self.lo})"
        if self.kind is GuardKind.IN:
            return f"claim_in({self.lo}, {self.hi})"
        return self.kind.value


@dataclass(frozen=True)
class AirNode:
    node_id: str
    kind: NodeKind
    demand: Optional[Demand] = None
    trace_ref: Optional[str] = None


@dataclass(frozen=True)
class AirEdge:
    source: str
    target: str
    guard: Guard = field(default_factory=Guard.always)


@dataclass
class AirGraph:
    graph_id: str
    nodes: List[AirNode]
    edges: List[AirEdge]
    entry_node: str
    _node_index: Dict[str, AirNode] = field(default_factory=dict, init=False, repr=False, compare=False)
    _out_edges: Dict[str, List[AirEdge]] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        for node in self.nodes:
            self._node_index.setdefault(node.node_id, node)
            self._out_edges.setdefault(node.node_id, [])
        for edge in self.edges:
            self._out_edges.setdefault(edge.source, []).append(edge)

    def node(self, node_id: str) -> AirNode:
        return self._node_index[node_id]

    def has_node(self, node_id: str) -> bool:
        return node_id in self._node_index

    def out_edges(self, node_id: str) -> List[AirEdge]:
        return self._out_edges.get(node_id, [])

    def fen_nodes(self) -> List[AirNode]:
        return [node for node in self.nodes if node.kind is NodeKind.FEN]

    def get_resource_nodes(self) -> List[AirNode]:
        return [node for node in self.nodes if node.kind is NodeKind.GET_RESOURCE]

    def to_networkx(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph(graph_id=self.graph_id)
        for node in self.nodes:
            g.add_node(node.node_id, kind=node.kind)
        for edge in self.edges:
            g.add_edge(edge.source, edge.target, guard=edge.guard)
        return g


_TOP_KEYS = {"id", "entry", "nodes", "edges"}
_NODE_KEYS = {
    NodeKind.GET_RESOURCE: {"id", "kind", "demand"},
    NodeKind.RELEASE_RESOURCE: {"id", "kind"},
    NodeKind.FEN: {"id", "kind", "trace"},
}
_DEMAND_KEYS = {"min_cpus", "max_cpus", "max_load"}
_EDGE_KEYS = {"from", "to", "guard"}


def _expect(cond: bool, path: str, message: str):
    if not cond:
        raise AirSyntaxError(f"{path}: {message}")


def _check_keys(obj: Any, allowed: set, required: set, path: str):
    _expect(isinstance(obj, dict), path, f"expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - allowed)
    _expect(not unknown, path, f"unknown keys {unknown}")
    missing = sorted(required - set(obj))
    _expect(not missing, path, f"missing keys {missing}")


def _ident(value: Any, path: str) -> str:
    _expect(isinstance(value, str) and value != "", path, "expected a non-empty string identifier")
    return sys.intern(value)


def _count(value: Any, path: str) -> int:
    _expect(isinstance(value, int) and not isinstance(value, bool), path, f"expected an integer, got {value!r}")
    return value


def _parse_guard(raw: Any, path: str) -> Guard:
    if raw == "always":
        return Guard.always()
    if raw == "default":
        return Guard.default()
    _expect(isinstance(raw, dict) and len(raw) == 1, path, f"unrecognised guard {raw!r}")
    (key, value), = raw.items()
    if key == "eq":
        return Guard.claim_eq(_count(value, f"{path}.eq"))
    if key == "ge":
        return Guard.claim_ge(_count(value, f"{path}.ge"))
    if key == "in":
        _expect(isinstance(value, list) and len(value) == 2, f"{path}.in", "expected [lo, hi]")
        return Guard.claim_in(_count(value[0], f"{path}.in[0]"), _count(value[1], f"{path}.in[1]"))
    raise AirSyntaxError(f"{path}: unrecognised guard {raw!r}")


def _parse_demand(raw: Any, path: str) -> Demand:
    _check_keys(raw, _DEMAND_KEYS, {"min_cpus", "max_cpus"}, path)
    min_cpus = _count(raw["min_cpus"], f"{path}.min_cpus")
    max_cpus = _count(raw["max_cpus"], f"{path}.max_cpus")
    _expect(1 <= min_cpus <= max_cpus, path, "demand needs 1 <= min_cpus <= max_cpus")
    max_load = raw.get("max_load")
    if max_load is not None:
        _expect(isinstance(max_load, (int, float)) and not isinstance(max_load, bool), f"{path}.max_load", "expected a number or null")
        max_load = Fraction(str(max_load))
        _expect(0 <= max_load <= 1, f"{path}.max_load", "must lie in [0, 1]")
    return Demand(min_cpus=min_cpus, max_cpus=max_cpus, max_load=max_load)


def _parse_node(raw: Any, path: str) -> AirNode:
    _expect(isinstance(raw, dict), path, f"expected an object, got {type(raw).__name__}")
    kind_name = raw.get("kind")
    try:
        kind = NodeKind(kind_name)
    except ValueError:
        raise UnknownNodeKind(f"{path}.kind: unknown node kind {kind_name!r}")
    required = _NODE_KEYS[kind]
    _check_keys(raw, required, required, path)
    node_id = _ident(raw["id"], f"{path}.id")
    if kind is NodeKind.GET_RESOURCE:
        return AirNode(node_id, kind, demand=_parse_demand(raw["demand"], f"{path}.demand"))
    if kind is NodeKind.FEN:
        return AirNode(node_id, kind, trace_ref=_ident(raw["trace"], f"{path}.trace"))
    return AirNode(node_id, kind)


def parse_air(text: str) -> AirGraph:
    """Parse an AIR document. Only the syntax is checked here; use ``validate_air`` for the rest."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise AirSyntaxError(f"line {e.lineno} column {e.colno}: {e.msg}")
    _check_keys(doc, _TOP_KEYS, _TOP_KEYS, "$")
    _expect(isinstance(doc["nodes"], list), "$.nodes", "expected a list")
    _expect(isinstance(doc["edges"], list), "$.edges", "expected a list")
    nodes = [_parse_node(raw, f"$.nodes[{i}]") for i, raw in enumerate(doc["nodes"])]
    edges = []
    for i, raw in enumerate(doc["edges"]):
        path = f"$.edges[{i}]"
        _check_keys(raw, _EDGE_KEYS, _EDGE_KEYS, path)
        edges.append(
            AirEdge(
                source=_ident(raw["from"], f"{path}.from"),
                target=_ident(raw["to"], f"{path}.to"),
                guard=_parse_guard(raw["guard"], f"{path}.guard"),
            )
        )
    return AirGraph(
        graph_id=_ident(doc["id"], "$.id"),
        nodes=nodes,
        edges=edges,
        entry_node=_ident(doc["entry"], "$.entry"),
    )


def _node_to_json(node: AirNode) -> Dict[str, Any]:
    out: Dict[str, Any] = {"id": node.node_id, "kind": node.kind.value}
    if node.kind is NodeKind.GET_RESOURCE:
        assert node.demand is not None
        out["demand"] = {
            "min_cpus": node.demand.min_cpus,
            "max_cpus": node.demand.max_cpus,
            "max_load": None if node.demand.max_load is None else float(node.demand.max_load),
        }
    elif node.kind is NodeKind.FEN:
        out["trace"] = node.trace_ref
    return out


def print_air(graph: AirGraph) -> str:
    doc = {
        "id": graph.graph_id,
        "entry": graph.entry_node,
        "nodes": [_node_to_json(node) for node in graph.nodes],
        "edges": [{"from": e.source, "to": e.target, "guard": e.guard.to_json()} for e in graph.edges],
    }
    return json.dumps(doc, indent=2) + "\n"


def load_air(path: str) -> AirGraph:
    with open(path, "r") as f:
        return parse_air(f.read())


def select_edge(graph: AirGraph, node_id: str, claim_size: int) -> str:
    """Successor of ``node_id`` for the current claim size.

    ``default`` is taken only when no explicit guard matches.
    """
    edges = graph.out_edges(node_id)
    assert len(edges) > 0, f"{node_id} is a leaf of {graph.graph_id}"
    matched = [e for e in edges if e.guard.matches(claim_size)]
    if len(matched) == 1:
        return matched[0].target
    if len(matched) > 1:
        raise NoMatchingEdge(
            f"{graph.graph_id}/{node_id}: {len(matched)} guards match claim size {claim_size}, the graph was not validated"
        )
    defaults = [e for e in edges if e.guard.kind is GuardKind.DEFAULT]
    if len(defaults) != 1:
        raise NoMatchingEdge(f"{graph.graph_id}/{node_id}: no edge matches claim size {claim_size}")
    return defaults[0].target
