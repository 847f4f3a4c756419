"""Process data-point configuration with hierarchical inheritance.

Field devices bind the process variables of the primary elements they are
physically wired to; those bindings become addressed data points (COA per
station, IOA bands for monitoring/control) which are then inherited
identity-preserving up the chain field device -> RTU -> SCADA.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .blueprint import Blueprint
from .errors import ConfigurationError, InvariantViolation, UnresolvedReference
from .model import DataPoint, DataPointMap, InfrastructureGraph, Station

MONITORING_IOA_BASE = 100
CONTROL_IOA_BASE = 2000


@dataclass(frozen=True)
class Binding:
    device: str
    source_node: str
    source_attr: str
    template: str


@dataclass(frozen=True)
class MergeSelector:
    """Filter for inter-SCADA inheritance; empty selectors pick nothing."""

    categories: tuple[str, ...] = ()
    device_kinds: tuple[str, ...] = ()


def bind_primary_data(g: InfrastructureGraph, bp: Blueprint) -> tuple[Binding, ...]:
    """Which process variables each field device can see, per the blueprint
    binding table and the device's process interfaces."""
    bindings: list[Binding] = []
    for node in g.sorted_nodes():
        if node.zone != "field":
            continue
        for edge in g.incident(node.id, "process_interface"):
            target = g.nodes[edge.other(node.id)]
            for template_name in bp.binding_for(node.kind, target.kind):
                template = bp.datapoint_template(template_name)
                attr = template.category.split(".", 1)[1]
                if attr not in target.attrs:
                    raise UnresolvedReference(
                        f"device {node.id}: element {target.id} has no attribute '{attr}'"
                    )
                bindings.append(
                    Binding(
                        device=node.id,
                        source_node=target.id,
                        source_attr=attr,
                        template=template_name,
                    )
                )
    return tuple(sorted(bindings, key=lambda b: (b.device, b.source_node, b.source_attr)))


def station_ordinals(stations: tuple[Station, ...]) -> dict[str, int]:
    """COA per station: 1-based position in the sorted non-control-center ids."""
    grid_stations = sorted(s.id for s in stations if not s.control_center)
    return {station_id: i + 1 for i, station_id in enumerate(grid_stations)}


def assign_field_datapoints(
    bindings: tuple[Binding, ...],
    g: InfrastructureGraph,
    stations: tuple[Station, ...],
    bp: Blueprint,
) -> DataPointMap:
    """Turn bindings into addressed data points.

    The COA is the station ordinal; IOAs count up through the station's
    devices in sorted-id order (monitoring from 100, control from 2000) so
    that aggregation at the RTU can never collide.
    """
    ordinals = station_ordinals(stations)
    by_device: dict[str, list[Binding]] = {}
    for binding in bindings:
        by_device.setdefault(binding.device, []).append(binding)

    by_station: dict[str, list[str]] = {}
    for device in sorted(by_device):
        station = g.nodes[device].station
        by_station.setdefault(station, []).append(device)

    points: dict[str, tuple[DataPoint, ...]] = {}
    sources: dict[tuple[str, str], list[str]] = {}
    for station_id in sorted(by_station):
        coa = ordinals[station_id]
        next_ioa = {"monitoring": MONITORING_IOA_BASE, "control": CONTROL_IOA_BASE}
        for device in by_station[station_id]:
            device_points = []
            for binding in by_device[device]:
                template = bp.datapoint_template(binding.template)
                if template is None:
                    raise ConfigurationError(
                        f"no datapoint template '{binding.template}' for {binding.source_node}."
                        f"{binding.source_attr}"
                    )
                ioa = next_ioa[template.direction]
                next_ioa[template.direction] += 1
                device_points.append(
                    DataPoint(
                        coa=coa,
                        ioa=ioa,
                        type_id=template.type_id,
                        cot=template.cot,
                        direction=template.direction,
                        category=template.category,
                        source_node=binding.source_node,
                        source_attr=binding.source_attr,
                        size_bytes=template.size_bytes,
                        device=device,
                        lineage=(device,),
                    )
                )
                sources.setdefault((binding.source_node, binding.source_attr), []).append(device)
            points[device] = tuple(device_points)

    return DataPointMap(
        points=points,
        sources={key: tuple(sorted(set(devices))) for key, devices in sorted(sources.items())},
    )


def _aggregate(children_points: list[DataPoint], owner: str) -> tuple[DataPoint, ...]:
    aggregated = []
    seen: dict[tuple[int, int], str] = {}
    for point in sorted(children_points, key=lambda p: (p.coa, p.ioa, p.device)):
        key = (point.coa, point.ioa)
        if key in seen:
            raise InvariantViolation(
                f"(coa, ioa) collision at {owner}: {key} held by {seen[key]} and {point.device}"
            )
        seen[key] = point.device
        aggregated.append(replace(point, device=owner, lineage=point.lineage + (owner,)))
    return tuple(aggregated)


def inherit_datapoints(
    g: InfrastructureGraph, field_map: DataPointMap
) -> DataPointMap:
    """Roll field-device points up into RTUs and the SCADA host.

    Inheritance is identity-preserving: the (COA, IOA, TypeID) triple never
    changes, only the owner and lineage grow.  A collision at any
    aggregation level is an allocation bug and raises."""
    points = dict(field_map.points)

    rtu_points: dict[str, list[DataPoint]] = {}
    for rtu in g.nodes_of_kind("rtu"):
        children = [
            p
            for node in g.station_nodes(rtu.station)
            if node.zone == "field"
            for p in field_map.points.get(node.id, ())
        ]
        rtu_points[rtu.id] = children
    for rtu_id in sorted(rtu_points):
        points[rtu_id] = _aggregate(rtu_points[rtu_id], rtu_id)

    scada_nodes = g.nodes_of_kind("scada_host")
    if scada_nodes:
        scada = scada_nodes[0].id
        children = [p for rtu_id in sorted(rtu_points) for p in points[rtu_id]]
        points[scada] = _aggregate(children, scada)

    return DataPointMap(points=points, sources=field_map.sources)


def merge_scada_views(
    base_map: DataPointMap,
    base_scada: str,
    other_map: DataPointMap,
    other_scada: str,
    selector: MergeSelector,
    coa_offset: int,
    kind_of: dict[str, str] | None = None,
) -> DataPointMap:
    """Extend one SCADA's point set with a filtered view of another's.

    Foreign points keep their IOA but receive a COA offset (the declared
    stride) and a lineage entry for the foreign SCADA.  Offsets that collide
    with the receiving set raise."""
    kind_of = kind_of or {}
    selected = []
    for point in other_map.device_points(other_scada):
        origin = point.lineage[0]
        category_hit = point.category in selector.categories
        kind_hit = kind_of.get(origin) in selector.device_kinds
        if category_hit or kind_hit:
            selected.append(point)

    if not selected:
        return base_map

    merged_points = dict(base_map.points)
    own = list(merged_points.get(base_scada, ()))
    held = {(p.coa, p.ioa) for p in own}
    for point in sorted(selected, key=lambda p: (p.coa, p.ioa)):
        shifted = replace(
            point,
            coa=point.coa + coa_offset,
            device=base_scada,
            lineage=point.lineage + (base_scada,),
        )
        key = (shifted.coa, shifted.ioa)
        if key in held:
            raise InvariantViolation(
                f"COA collision merging foreign points: {key} already present at {base_scada}"
            )
        held.add(key)
        own.append(shifted)
    merged_points[base_scada] = tuple(sorted(own, key=lambda p: (p.coa, p.ioa)))
    return DataPointMap(points=merged_points, sources=base_map.sources)


def configure_datapoints(
    g: InfrastructureGraph, stations: tuple[Station, ...], bp: Blueprint
) -> DataPointMap:
    """Run data-point configuration end to end (bind, assign, inherit)."""
    bindings = bind_primary_data(g, bp)
    field_map = assign_field_datapoints(bindings, g, stations, bp)
    return inherit_datapoints(g, field_map)
