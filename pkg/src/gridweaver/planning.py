"""Network-planning analytics: cyclic traffic estimation per connection,
per-link load accumulation, capacity checks and greedy reinforcement
proposals for overloaded links."""

from __future__ import annotations

from .algorithms import euclidean
from .blueprint import Blueprint, ProtocolSpec
from .errors import ConfigurationError
from .model import (
    CapacityViolation,
    DataPointMap,
    FlowDemand,
    GraphEdge,
    InfrastructureGraph,
    LinkLoad,
    PlanningResult,
    ReinforcementProposal,
    Station,
)
from .netconfig import compute_routes

DEFAULT_BURST_WINDOW_S = 0.1
DEFAULT_CAPACITY_THRESHOLD = 0.8


def estimate_device_traffic(
    g: InfrastructureGraph,
    datapoints: DataPointMap,
    protocols: tuple[ProtocolSpec, ...],
    burst_window_s: float = DEFAULT_BURST_WINDOW_S,
) -> tuple[FlowDemand, ...]:
    """Cyclic demand per logical connection.

    Each of the slave's monitoring points contributes its payload size plus
    the protocol's per-point overhead once per cycle; the burst case assumes
    the full point set is transmitted within one burst window."""
    by_name = {p.name: p for p in protocols}
    flows = []
    for edge in g.sorted_edges("logical_connection"):
        proto = by_name.get(edge.attrs["protocol"])
        if proto is None:
            raise ConfigurationError(f"connection {edge.id}: unknown protocol")
        monitored = [
            p for p in datapoints.device_points(edge.attrs["slave"]) if p.direction == "monitoring"
        ]
        bytes_per_cycle = sum(p.size_bytes + proto.payload_bytes_per_point for p in monitored)
        mean_bps = bytes_per_cycle * 8 / proto.cycle_seconds
        burst_bps = bytes_per_cycle * 8 / min(burst_window_s, proto.cycle_seconds)
        flows.append(
            FlowDemand(
                connection=edge.id,
                bytes_per_cycle=bytes_per_cycle,
                cycle_seconds=proto.cycle_seconds,
                mean_bps=mean_bps,
                burst_bps=burst_bps,
            )
        )
    return tuple(flows)


def accumulate_link_loads(
    g: InfrastructureGraph,
    flows: tuple[FlowDemand, ...],
    paths: dict[str, tuple[str, ...]],
) -> tuple[LinkLoad, ...]:
    """Sum every flow onto the physical links its path traverses (both
    directions pooled)."""
    edge_by_pair: dict[tuple[str, str], str] = {}
    for edge in g.sorted_edges("physical_link"):
        edge_by_pair[(edge.a, edge.b)] = edge.id
        edge_by_pair[(edge.b, edge.a)] = edge.id

    mean: dict[str, float] = {}
    burst: dict[str, float] = {}
    for flow in flows:
        if flow.connection not in paths:
            raise ConfigurationError(f"flow {flow.connection} has no computed path")
        path = paths[flow.connection]
        for a, b in zip(path, path[1:]):
            link = edge_by_pair[(a, b)]
            mean[link] = mean.get(link, 0.0) + flow.mean_bps
            burst[link] = burst.get(link, 0.0) + flow.burst_bps

    loads = []
    for edge in g.sorted_edges("physical_link"):
        loads.append(
            LinkLoad(
                link=edge.id,
                mean_bps=mean.get(edge.id, 0.0),
                burst_bps=burst.get(edge.id, 0.0),
                utilization=mean.get(edge.id, 0.0) / edge.attrs["bandwidth_bps"],
            )
        )
    return tuple(loads)


def check_capacity(
    g: InfrastructureGraph,
    loads: tuple[LinkLoad, ...],
    threshold: float = DEFAULT_CAPACITY_THRESHOLD,
) -> tuple[CapacityViolation, ...]:
    """A link is violated when its burst load strictly exceeds
    bandwidth x threshold."""
    violations = []
    for load in loads:
        bandwidth = g.edges[load.link].attrs["bandwidth_bps"]
        if load.burst_bps > bandwidth * threshold:
            violations.append(
                CapacityViolation(
                    link=load.link,
                    burst_bps=load.burst_bps,
                    bandwidth_bps=bandwidth,
                    threshold=threshold,
                )
            )
    return tuple(violations)


def _burst_on_link(
    g: InfrastructureGraph,
    flows: tuple[FlowDemand, ...],
    paths: dict[str, tuple[str, ...]],
    link: str,
) -> float:
    edge = g.edges[link]
    total = 0.0
    for flow in flows:
        path = paths.get(flow.connection, ())
        for a, b in zip(path, path[1:]):
            if {a, b} == {edge.a, edge.b}:
                total += flow.burst_bps
                break
    return total


def suggest_reinforcement(
    g: InfrastructureGraph,
    stations: tuple[Station, ...],
    violations: tuple[CapacityViolation, ...],
    flows: tuple[FlowDemand, ...],
    bp: Blueprint,
    route_metric: str = "latency",
) -> tuple[tuple[ReinforcementProposal, ...], tuple[str, ...]]:
    """Greedy single-link augmentation: per violated link, the absent
    station-to-station link whose addition sheds the most burst load from
    it under recomputed shortest paths (ties to shorter distance, then to
    the smaller id).  Violations no single link can relieve produce a note
    instead of a proposal."""
    notes: list[str] = []
    proposals: list[ReinforcementProposal] = []

    routers = {
        s.id: f"{s.id}/router"
        for s in stations
        if not s.control_center and f"{s.id}/router" in g.nodes
    }
    coords = {s.id: s.coordinates for s in stations if s.id in routers}
    existing = set()
    for edge in g.sorted_edges("physical_link"):
        existing.add((min(edge.a, edge.b), max(edge.a, edge.b)))

    station_ids = sorted(routers)
    candidates = []
    wan_class = bp.link_class(bp.wan_link_classes[bp.wan_paradigm])
    for i, a in enumerate(station_ids):
        for b in station_ids[i + 1 :]:
            pair = (min(routers[a], routers[b]), max(routers[a], routers[b]))
            if pair in existing:
                continue
            candidates.append((f"wan:{a}--{b}", a, b, euclidean(coords[a], coords[b])))

    for violation in violations:
        best = None
        for candidate_id, a, b, distance in candidates:
            trial = g.copy()
            trial.add_edge(
                GraphEdge(
                    id=candidate_id,
                    a=routers[a],
                    b=routers[b],
                    kind="physical_link",
                    link_class=wan_class.name,
                    attrs={
                        "length_km": distance,
                        "role": "proposal",
                        "bandwidth_bps": wan_class.bandwidth_bps,
                        "latency_ms": wan_class.latency_ms,
                        "jitter_ms": wan_class.jitter_ms,
                        "loss_rate": wan_class.loss_rate,
                    },
                )
            )
            new_paths = compute_routes(trial, route_metric)
            new_burst = _burst_on_link(trial, flows, new_paths, violation.link)
            reduction = violation.burst_bps - new_burst
            key = (-reduction, distance, candidate_id)
            if best is None or key < best[0]:
                best = (key, reduction, distance, candidate_id, (a, b))
        if best is None or best[1] <= 0:
            notes.append(
                f"{violation.link}: no single additional station link reduces its load"
            )
            continue
        proposals.append(
            ReinforcementProposal(
                candidate=best[3],
                stations=best[4],
                distance_km=best[2],
                relieves=violation.link,
                burst_reduction_bps=best[1],
            )
        )

    proposals.sort(key=lambda p: (-p.burst_reduction_bps, p.candidate))
    return tuple(proposals), tuple(notes)


def analyze(
    g: InfrastructureGraph,
    stations: tuple[Station, ...],
    datapoints: DataPointMap,
    paths: dict[str, tuple[str, ...]],
    bp: Blueprint,
    route_metric: str = "latency",
) -> PlanningResult:
    """Full planning pass over a configured model."""
    burst_window = float(bp.setting("burst_window_seconds", DEFAULT_BURST_WINDOW_S))
    threshold = float(bp.setting("capacity_threshold", DEFAULT_CAPACITY_THRESHOLD))
    flows = estimate_device_traffic(g, datapoints, bp.protocol_specs, burst_window)
    loads = accumulate_link_loads(g, flows, paths)
    violations = check_capacity(g, loads, threshold)
    proposals: tuple[ReinforcementProposal, ...] = ()
    notes: tuple[str, ...] = ()
    if violations:
        proposals, notes = suggest_reinforcement(
            g, stations, violations, flows, bp, route_metric
        )
    return PlanningResult(
        flows=flows, loads=loads, violations=violations, proposals=proposals, notes=notes
    )
