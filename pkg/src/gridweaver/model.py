"""Core data structures: the typed infrastructure graph and the records
produced by the configuration phase."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import InvariantViolation

MODEL_FORMAT = "model-v1"

# Primary elements share the "switch" kind with network switches; the zone
# ("process" vs "station") is the discriminator.
PRIMARY_KINDS = frozenset({"bus", "transformer", "load", "generator", "switch"})
L3_KINDS = frozenset({"router", "firewall", "modem"})
IED_KINDS = frozenset({"ied_control", "ied_measurement", "ied_protection"})
HOST_KINDS = IED_KINDS | {"rtu", "scada_host"}
EDGE_KINDS = ("electrical", "physical_link", "logical_connection", "process_interface")


@dataclass(frozen=True)
class GraphNode:
    id: str
    kind: str
    zone: str
    station: str | None = None
    attrs: dict = field(default_factory=dict)


@dataclass(frozen=True)
class GraphEdge:
    id: str
    a: str
    b: str
    kind: str
    link_class: str | None = None
    attrs: dict = field(default_factory=dict)

    def other(self, node_id: str) -> str:
        return self.b if node_id == self.a else self.a


class InfrastructureGraph:
    """Typed multigraph of primary objects, ICT devices and their relations.

    Node and edge insertion is checked (unique ids, known endpoints) and all
    iteration helpers return id-sorted sequences so that downstream steps
    are deterministic regardless of construction order.
    """

    def __init__(self):
        self.nodes: dict[str, GraphNode] = {}
        self.edges: dict[str, GraphEdge] = {}

    def copy(self) -> "InfrastructureGraph":
        g = InfrastructureGraph()
        g.nodes = dict(self.nodes)
        g.edges = dict(self.edges)
        return g

    def __eq__(self, other):
        return (
            isinstance(other, InfrastructureGraph)
            and self.nodes == other.nodes
            and self.edges == other.edges
        )

    def add_node(self, node: GraphNode) -> None:
        if node.id in self.nodes:
            raise InvariantViolation(f"duplicate node id '{node.id}'")
        self.nodes[node.id] = node

    def update_node(self, node_id: str, **changes) -> None:
        self.nodes[node_id] = replace(self.nodes[node_id], **changes)

    def add_edge(self, edge: GraphEdge) -> None:
        if edge.id in self.edges:
            raise InvariantViolation(f"duplicate edge id '{edge.id}'")
        for endpoint in (edge.a, edge.b):
            if endpoint not in self.nodes:
                raise InvariantViolation(f"edge '{edge.id}' references unknown node '{endpoint}'")
        if edge.kind not in EDGE_KINDS:
            raise InvariantViolation(f"edge '{edge.id}' has unknown kind '{edge.kind}'")
        if edge.kind == "physical_link":
            for endpoint in (edge.a, edge.b):
                if self.nodes[endpoint].zone == "process":
                    raise InvariantViolation(
                        f"physical link '{edge.id}' attaches to primary element '{endpoint}'"
                    )
        self.edges[edge.id] = edge

    def update_edge(self, edge_id: str, **changes) -> None:
        self.edges[edge_id] = replace(self.edges[edge_id], **changes)

    def sorted_nodes(self) -> list[GraphNode]:
        return [self.nodes[nid] for nid in sorted(self.nodes)]

    def sorted_edges(self, kind: str | None = None) -> list[GraphEdge]:
        edges = [self.edges[eid] for eid in sorted(self.edges)]
        if kind is not None:
            edges = [e for e in edges if e.kind == kind]
        return edges

    def nodes_of_kind(self, *kinds: str) -> list[GraphNode]:
        return [n for n in self.sorted_nodes() if n.kind in kinds]

    def station_nodes(self, station_id: str) -> list[GraphNode]:
        return [n for n in self.sorted_nodes() if n.station == station_id]

    def incident(self, node_id: str, kind: str | None = None) -> list[GraphEdge]:
        found = [e for e in self.sorted_edges(kind) if node_id in (e.a, e.b)]
        return found

    def physical_degree(self, node_id: str) -> int:
        return len(self.incident(node_id, "physical_link"))

    def physical_adjacency(self) -> dict[str, list[tuple[str, str]]]:
        """node -> sorted (neighbor, edge id) pairs over physical links."""
        adj: dict[str, list[tuple[str, str]]] = {}
        for edge in self.sorted_edges("physical_link"):
            adj.setdefault(edge.a, []).append((edge.b, edge.id))
            adj.setdefault(edge.b, []).append((edge.a, edge.id))
        for pairs in adj.values():
            pairs.sort()
        return adj


@dataclass(frozen=True)
class Station:
    id: str
    station_class: str
    primary_members: tuple[str, ...]
    bus_group: tuple[str, ...]
    coordinates: tuple[float, float]
    control_center: bool = False


@dataclass(frozen=True)
class Interface:
    id: str
    node: str
    edge: str
    index: int
    mac: str
    address: str | None = None
    prefix_len: int | None = None


@dataclass(frozen=True)
class Subnet:
    id: str
    members: tuple[str, ...]  # interface ids
    prefix: str | None = None


@dataclass(frozen=True)
class Route:
    node: str
    destination: str  # "<address>/<len>"
    next_hop: str
    metric: int


@dataclass(frozen=True)
class DataPoint:
    coa: int
    ioa: int
    type_id: str
    cot: str
    direction: str
    category: str
    source_node: str
    source_attr: str
    size_bytes: int
    device: str
    lineage: tuple[str, ...]

    @property
    def triple(self) -> tuple[int, int, str]:
        return (self.coa, self.ioa, self.type_id)


@dataclass(frozen=True)
class DataPointMap:
    points: dict[str, tuple[DataPoint, ...]]  # device id -> points
    sources: dict[tuple[str, str], tuple[str, ...]]  # (node, attr) -> field devices

    def device_points(self, device: str) -> tuple[DataPoint, ...]:
        return self.points.get(device, ())

    def __eq__(self, other):
        return (
            isinstance(other, DataPointMap)
            and self.points == other.points
            and self.sources == other.sources
        )


@dataclass(frozen=True)
class WhitelistRule:
    connection: str
    src: str
    dst: str
    protocol: str
    port: int
    direction: str
    datapoints: tuple[tuple[int, int, str], ...]


@dataclass(frozen=True)
class FlowDemand:
    connection: str
    bytes_per_cycle: int
    cycle_seconds: float
    mean_bps: float
    burst_bps: float


@dataclass(frozen=True)
class LinkLoad:
    link: str
    mean_bps: float
    burst_bps: float
    utilization: float


@dataclass(frozen=True)
class CapacityViolation:
    link: str
    burst_bps: float
    bandwidth_bps: float
    threshold: float


@dataclass(frozen=True)
class ReinforcementProposal:
    candidate: str  # proposed wan edge id
    stations: tuple[str, str]
    distance_km: float
    relieves: str  # violated link id
    burst_reduction_bps: float


@dataclass(frozen=True)
class PlanningResult:
    flows: tuple[FlowDemand, ...]
    loads: tuple[LinkLoad, ...]
    violations: tuple[CapacityViolation, ...]
    proposals: tuple[ReinforcementProposal, ...]
    notes: tuple[str, ...]


@dataclass(frozen=True)
class NetworkConfiguration:
    interfaces: dict[str, tuple[Interface, ...]]  # node -> interfaces
    subnets: tuple[Subnet, ...]
    routes: tuple[Route, ...]
    paths: dict[str, tuple[str, ...]]  # connection id -> node sequence

    def __eq__(self, other):
        return (
            isinstance(other, NetworkConfiguration)
            and self.interfaces == other.interfaces
            and self.subnets == other.subnets
            and self.routes == other.routes
            and self.paths == other.paths
        )

    def all_interfaces(self) -> list[Interface]:
        out: list[Interface] = []
        for node in sorted(self.interfaces):
            out.extend(self.interfaces[node])
        return out

    def interface_by_id(self) -> dict[str, Interface]:
        return {itf.id: itf for itf in self.all_interfaces()}


@dataclass(frozen=True)
class ModelMeta:
    format_version: str
    grid_fingerprint: str
    blueprint_fingerprint: str
    wan_paradigm: str
    route_metric: str
    protocols: tuple  # blueprint.ProtocolSpec entries
    settings: dict

    def __eq__(self, other):
        return isinstance(other, ModelMeta) and (
            self.format_version,
            self.grid_fingerprint,
            self.blueprint_fingerprint,
            self.wan_paradigm,
            self.route_metric,
            self.protocols,
            self.settings,
        ) == (
            other.format_version,
            other.grid_fingerprint,
            other.blueprint_fingerprint,
            other.wan_paradigm,
            other.route_metric,
            other.protocols,
            other.settings,
        )


@dataclass
class InfraModel:
    """The complete generated model; configuration sections fill in as the
    pipeline advances and stay None for stages that were not run."""

    meta: ModelMeta
    graph: InfrastructureGraph
    stations: tuple[Station, ...]
    netcfg: NetworkConfiguration | None = None
    datapoints: DataPointMap | None = None
    whitelist: tuple[WhitelistRule, ...] | None = None
    planning: PlanningResult | None = None

    def __eq__(self, other):
        return isinstance(other, InfraModel) and (
            self.meta == other.meta
            and self.graph == other.graph
            and self.stations == other.stations
            and self.netcfg == other.netcfg
            and self.datapoints == other.datapoints
            and self.whitelist == other.whitelist
            and self.planning == other.planning
        )

    def station(self, station_id: str) -> Station:
        return next(s for s in self.stations if s.id == station_id)

    def scada_node(self) -> GraphNode:
        hosts = self.graph.nodes_of_kind("scada_host")
        if not hosts:
            raise InvariantViolation("model has no scada_host node")
        return hosts[0]

    def logical_connections(self) -> list[GraphEdge]:
        return self.graph.sorted_edges("logical_connection")
