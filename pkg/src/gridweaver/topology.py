"""Bottom-up construction of the integrated infrastructure graph.

Starting from the electrical model, the builder instantiates primary
objects, aggregates them into stations, populates each station with field
devices, a LAN and an RTU, and finally erects the WAN under the selected
communication paradigm (fiber, powerline or mobile) before wiring the
protocol-level master/slave connections.
"""

from __future__ import annotations

import math

from . import grid_io
from .algorithms import (
    UnionFind,
    connected_components,
    euclidean,
    farthest_point_seeds,
    minimum_spanning_tree,
)
from .blueprint import Blueprint, StationClass, StationFacts, ZONE_RANK, resolve_station_template
from .errors import DisconnectedTopology, InvariantViolation
from .grid_io import PowerGridModel
from .model import GraphEdge, GraphNode, InfrastructureGraph, Station

__all__ = [
    "instantiate_primary_objects",
    "aggregate_stations",
    "place_field_devices",
    "build_station_lan",
    "place_rtu",
    "build_wan",
    "build_topology",
    "minimum_spanning_tree",
]


# ---------------------------------------------------------------------------
# step 1: primary technology objects
# ---------------------------------------------------------------------------


def instantiate_primary_objects(grid: PowerGridModel) -> InfrastructureGraph:
    """One process-zone node per primary element, one electrical edge per
    closed branch and transformer.  Process variables that field devices can
    later bind to (tap position, powers, switch state, ...) are initialized
    as node attributes."""
    g = InfrastructureGraph()
    for bus in grid.buses:
        x, y = bus.coordinates if bus.coordinates else (0.0, 0.0)
        g.add_node(
            GraphNode(
                id=bus.id,
                kind="bus",
                zone="process",
                attrs={
                    "nominal_voltage_kv": bus.nominal_voltage_kv,
                    "x": x,
                    "y": y,
                    "external_grid": bus.id == grid.external_grid_bus,
                    "voltage": bus.nominal_voltage_kv,
                },
            )
        )
    for tr in grid.transformers:
        g.add_node(
            GraphNode(
                id=tr.id,
                kind="transformer",
                zone="process",
                attrs={
                    "hv_bus": tr.hv_bus,
                    "lv_bus": tr.lv_bus,
                    "tap_position": tr.tap_position,
                    "tap_min": tr.tap_min,
                    "tap_max": tr.tap_max,
                    "voltage_setpoint": 1.0,
                },
            )
        )
    for load in grid.loads:
        g.add_node(
            GraphNode(
                id=load.id,
                kind="load",
                zone="process",
                attrs={"bus": load.bus, "p": load.p_mw, "q": load.q_mvar},
            )
        )
    for gen in grid.generators:
        g.add_node(
            GraphNode(
                id=gen.id,
                kind="generator",
                zone="process",
                attrs={"bus": gen.bus, "p": gen.p_mw, "p_setpoint": gen.p_mw},
            )
        )
    for sw in grid.switches:
        state = "closed" if sw.closed else "open"
        attrs = {"bus": sw.bus, "closed": sw.closed, "state": state, "command": state}
        if sw.branch is not None:
            attrs["branch"] = sw.branch
        else:
            attrs["other_bus"] = sw.other_bus
        g.add_node(GraphNode(id=sw.id, kind="switch", zone="process", attrs=attrs))

    for element_id, bus_a, bus_b in grid_io.closed_electrical_edges(grid):
        length = None
        for br in grid.branches:
            if br.id == element_id:
                length = br.length_km
        attrs = {} if length is None else {"length_km": length}
        g.add_edge(
            GraphEdge(id=f"el:{element_id}", a=bus_a, b=bus_b, kind="electrical", attrs=attrs)
        )
    return g


# ---------------------------------------------------------------------------
# step 2: station aggregation
# ---------------------------------------------------------------------------


def _bus_groups(grid: PowerGridModel) -> list[list[str]]:
    uf = UnionFind([b.id for b in grid.buses])
    for sw in grid.switches:
        if sw.other_bus is not None and sw.closed:
            uf.union(sw.bus, sw.other_bus)
    groups: dict[str, list[str]] = {}
    for bus in grid.buses:
        groups.setdefault(uf.find(bus.id), []).append(bus.id)
    return sorted((sorted(members) for members in groups.values()), key=lambda g: g[0])


def aggregate_stations(
    g: InfrastructureGraph, grid: PowerGridModel, bp: Blueprint
) -> tuple[InfrastructureGraph, tuple[Station, ...]]:
    """Partition primary objects into stations and classify each one.

    A station is a group of buses joined by closed bus couplers together
    with everything attached to them; transformers follow their HV bus.  A
    synthetic control-center station (no primary members) is appended for
    the SCADA side.  Returns the graph with station ids assigned.
    """
    g = g.copy()
    stations: list[Station] = []
    member_map: dict[str, list[str]] = {}

    for group in _bus_groups(grid):
        station_id = f"stn_{group[0]}"
        members = list(group)
        for tr in grid.transformers:
            if tr.hv_bus in group:
                members.append(tr.id)
        for load in grid.loads:
            if load.bus in group:
                members.append(load.id)
        for gen in grid.generators:
            if gen.bus in group:
                members.append(gen.id)
        for sw in grid.switches:
            if sw.bus in group:
                members.append(sw.id)
        members = sorted(members)
        member_map[station_id] = members

        categories = frozenset(g.nodes[m].kind for m in members)
        hv_external = any(
            g.nodes[m].kind == "transformer"
            and g.nodes[g.nodes[m].attrs["hv_bus"]].attrs.get("external_grid")
            for m in members
        )
        station_class = resolve_station_template(
            bp, StationFacts(categories=categories, hv_connects_external=hv_external)
        )
        xs = [g.nodes[b].attrs["x"] for b in group]
        ys = [g.nodes[b].attrs["y"] for b in group]
        stations.append(
            Station(
                id=station_id,
                station_class=station_class.name,
                primary_members=tuple(members),
                bus_group=tuple(group),
                coordinates=(sum(xs) / len(xs), sum(ys) / len(ys)),
            )
        )

    for station in stations:
        for member in station.primary_members:
            g.update_node(member, station=station.id)

    uplink = _uplink_station(stations, grid)
    cc_class = bp.control_center_class()
    stations.append(
        Station(
            id="cc",
            station_class=cc_class.name,
            primary_members=(),
            bus_group=(),
            coordinates=(uplink.coordinates[0], uplink.coordinates[1] + 1.0),
            control_center=True,
        )
    )
    return g, tuple(sorted(stations, key=lambda s: s.id))


def _uplink_station(stations: list[Station], grid: PowerGridModel) -> Station:
    """The WAN hand-over point for the control center: the station owning
    the external-grid bus, which is the primary substation in every grid
    that has one."""
    for station in sorted(stations, key=lambda s: s.id):
        if grid.external_grid_bus in station.bus_group:
            return station
    return sorted(stations, key=lambda s: s.id)[0]


# ---------------------------------------------------------------------------
# step 3: field devices
# ---------------------------------------------------------------------------

_PLACEMENT_KINDS = {
    "per_transformer": "transformer",
    "per_load": "load",
    "per_generator": "generator",
    "per_switch": "switch",
}


def _station_feeders(g: InfrastructureGraph, station: Station) -> list[GraphEdge]:
    """Closed electrical edges leaving the station's bus group."""
    group = set(station.bus_group)
    return [
        e
        for e in g.sorted_edges("electrical")
        if (e.a in group) != (e.b in group)
    ]


def place_field_devices(
    g: InfrastructureGraph, station: Station, bp: Blueprint, notes: list[str]
) -> InfrastructureGraph:
    """Create the station's field-zone devices and their one-to-one process
    interfaces to primary elements.  A placement rule that finds no matching
    elements is skipped with a note."""
    if station.control_center:
        return g
    g = g.copy()
    station_class = next(sc for sc in bp.station_classes if sc.name == station.station_class)
    for placement in sorted(set(station_class.devices), key=lambda d: (d.template, d.placement)):
        if placement.placement == "fixed":
            continue
        if placement.placement == "per_feeder":
            feeders = _station_feeders(g, station)
            if not feeders:
                notes.append(f"{station.id}: no feeders for {placement.template} placement")
            for edge in feeders:
                element_id = edge.id.removeprefix("el:")
                local_bus = edge.a if edge.a in station.bus_group else edge.b
                device_id = f"{station.id}/{placement.template}_feeder_{element_id}"
                g.add_node(
                    GraphNode(
                        id=device_id,
                        kind=bp.device_template(placement.template).kind,
                        zone="field",
                        station=station.id,
                        attrs={"template": placement.template, "target": local_bus, "feeder": element_id},
                    )
                )
                g.add_edge(
                    GraphEdge(
                        id=f"proc:{device_id}--{local_bus}",
                        a=device_id,
                        b=local_bus,
                        kind="process_interface",
                    )
                )
            continue

        element_kind = _PLACEMENT_KINDS[placement.placement]
        targets = [
            m for m in station.primary_members if g.nodes[m].kind == element_kind
        ]
        if not targets:
            notes.append(
                f"{station.id}: no {element_kind} elements for {placement.template} placement"
            )
        for target in targets:
            device_id = f"{station.id}/{placement.template}_{target}"
            g.add_node(
                GraphNode(
                    id=device_id,
                    kind=bp.device_template(placement.template).kind,
                    zone="field",
                    station=station.id,
                    attrs={"template": placement.template, "target": target},
                )
            )
            g.add_edge(
                GraphEdge(
                    id=f"proc:{device_id}--{target}",
                    a=device_id,
                    b=target,
                    kind="process_interface",
                )
            )
    return g


# ---------------------------------------------------------------------------
# steps 4-5: station LAN and RTU / control-center equipment
# ---------------------------------------------------------------------------


def _station_class_of(bp: Blueprint, station: Station) -> StationClass:
    return next(sc for sc in bp.station_classes if sc.name == station.station_class)


def build_station_lan(g: InfrastructureGraph, station: Station, bp: Blueprint) -> InfrastructureGraph:
    """Star LAN: one switch, one link per field device.  The switch is
    omitted only when there is nothing to attach (no field devices and the
    class places no RTU either)."""
    if station.control_center:
        return g
    g = g.copy()
    field_devices = [n for n in g.station_nodes(station.id) if n.zone == "field"]
    if not field_devices and not _station_class_of(bp, station).places_rtu:
        return g
    switch_id = f"{station.id}/switch"
    g.add_node(
        GraphNode(
            id=switch_id,
            kind="switch",
            zone="station",
            station=station.id,
            attrs={"template": bp.infrastructure["lan_switch"]},
        )
    )
    for device in field_devices:
        g.add_edge(
            GraphEdge(
                id=f"lan:{device.id}--{switch_id}",
                a=device.id,
                b=switch_id,
                kind="physical_link",
                link_class=bp.lan_link_class,
            )
        )
    return g


_CC_CHAIN_ORDER = ("scada_host", "switch", "firewall", "router")


def place_rtu(g: InfrastructureGraph, station: Station, bp: Blueprint) -> InfrastructureGraph:
    """Station-level aggregation equipment.

    Regular stations receive one RTU on the LAN switch; the control center
    is populated from its class device list and wired as a chain
    scada -> switch -> firewall -> router so that the firewall actually sits
    between the SCADA LAN and the WAN router.
    """
    g = g.copy()
    if not station.control_center:
        if not _station_class_of(bp, station).places_rtu:
            return g
        switch_id = f"{station.id}/switch"
        rtu_id = f"{station.id}/rtu"
        g.add_node(
            GraphNode(
                id=rtu_id,
                kind="rtu",
                zone="station",
                station=station.id,
                attrs={"template": bp.infrastructure["rtu"]},
            )
        )
        g.add_edge(
            GraphEdge(
                id=f"lan:{rtu_id}--{switch_id}",
                a=rtu_id,
                b=switch_id,
                kind="physical_link",
                link_class=bp.lan_link_class,
            )
        )
        return g

    station_class = _station_class_of(bp, station)
    by_kind: dict[str, list[str]] = {}
    for placement in station_class.devices:
        template = bp.device_template(placement.template)
        names = by_kind.setdefault(template.kind, [])
        node_id = f"{station.id}/{template.kind if template.kind != 'scada_host' else 'scada'}"
        if names:
            node_id = f"{node_id}_{len(names)}"
        names.append(node_id)
        g.add_node(
            GraphNode(
                id=node_id,
                kind=template.kind,
                zone="operation",
                station=station.id,
                attrs={"template": template.name},
            )
        )

    def first(kind: str) -> str | None:
        return by_kind.get(kind, [None])[0]

    chain = [first(kind) for kind in _CC_CHAIN_ORDER]
    chain = [node_id for node_id in chain if node_id is not None]
    for a, b in zip(chain, chain[1:]):
        g.add_edge(
            GraphEdge(
                id=f"lan:{a}--{b}", a=a, b=b, kind="physical_link", link_class=bp.lan_link_class
            )
        )
    hub = first("switch") or first("router")
    for kind, names in sorted(by_kind.items()):
        for extra in names[1:]:
            g.add_edge(
                GraphEdge(
                    id=f"lan:{extra}--{hub}",
                    a=extra,
                    b=hub,
                    kind="physical_link",
                    link_class=bp.lan_link_class,
                )
            )
    return g


# ---------------------------------------------------------------------------
# steps 6-8: WAN construction and logical connections
# ---------------------------------------------------------------------------


def _contracted_electrical_pairs(
    g: InfrastructureGraph, stations: list[Station]
) -> set[tuple[str, str]]:
    """Station pairs adjacent through at least one closed electrical edge."""
    station_of_bus = {}
    for station in stations:
        for bus in station.bus_group:
            station_of_bus[bus] = station.id
    pairs = set()
    for edge in g.sorted_edges("electrical"):
        sa, sb = station_of_bus.get(edge.a), station_of_bus.get(edge.b)
        if sa and sb and sa != sb:
            pairs.add((min(sa, sb), max(sa, sb)))
    return pairs


def _add_station_router(g: InfrastructureGraph, station: Station, bp: Blueprint) -> str:
    router_id = f"{station.id}/router"
    g.add_node(
        GraphNode(
            id=router_id,
            kind="router",
            zone="station",
            station=station.id,
            attrs={"template": bp.infrastructure["wan_router"]},
        )
    )
    g.add_edge(
        GraphEdge(
            id=f"lan:{station.id}/switch--{router_id}",
            a=f"{station.id}/switch",
            b=router_id,
            kind="physical_link",
            link_class=bp.lan_link_class,
        )
    )
    return router_id


def build_wan(
    g: InfrastructureGraph,
    stations: tuple[Station, ...],
    bp: Blueprint,
    paradigm: str | None = None,
) -> InfrastructureGraph:
    """Connect all stations to the control center under one WAN paradigm.

    fiber   -- per-station edge routers joined by the minimum spanning tree
               over distance-weighted candidate links
    plc     -- per-station edge routers joined along closed electrical edges
    mobile  -- per-station modems assigned to their nearest base station,
               star-shaped provider hierarchy behind a core router

    For fiber and plc the control center uplinks at the external-grid
    station; for mobile it attaches to the provider core.  Afterwards the
    protocol-level logical connections (SCADA over every RTU, every RTU over
    its own field devices) are added.
    """
    paradigm = paradigm or bp.wan_paradigm
    if paradigm not in bp.wan_link_classes:
        raise InvariantViolation(f"unknown WAN paradigm '{paradigm}'")
    g = g.copy()
    wan_class = bp.wan_link_classes[paradigm]

    cc = next(s for s in stations if s.control_center)
    cc_routers = [n for n in g.station_nodes(cc.id) if n.kind == "router"]
    if not cc_routers:
        raise InvariantViolation("control center has no router to uplink")
    cc_router = cc_routers[0].id

    ict_stations = [
        s
        for s in sorted(stations, key=lambda s: s.id)
        if not s.control_center and f"{s.id}/switch" in g.nodes
    ]
    coords = {s.id: s.coordinates for s in ict_stations}

    if ict_stations:
        ext_buses = [n for n in g.nodes_of_kind("bus") if n.attrs.get("external_grid")]
        uplink_station = next(
            (s for s in ict_stations if ext_buses and ext_buses[0].station == s.id),
            ict_stations[0],
        )

        if paradigm in ("fiber", "plc"):
            routers = {s.id: _add_station_router(g, s, bp) for s in ict_stations}
            if paradigm == "fiber":
                mode = bp.setting("fiber_candidates", "complete")
                if mode == "electrical_parallel":
                    pairs = sorted(_contracted_electrical_pairs(g, ict_stations))
                else:
                    ids = sorted(coords)
                    pairs = [(a, b) for i, a in enumerate(ids) for b in ids[i + 1 :]]
                candidates = [
                    (f"wan:{a}--{b}", a, b, euclidean(coords[a], coords[b])) for a, b in pairs
                ]
                selected = set(minimum_spanning_tree(sorted(coords), candidates))
                chosen = [c for c in candidates if c[0] in selected]
            else:
                pairs = sorted(_contracted_electrical_pairs(g, ict_stations))
                chosen = [
                    (f"wan:{a}--{b}", a, b, euclidean(coords[a], coords[b])) for a, b in pairs
                ]
            for edge_id, a, b, weight in chosen:
                g.add_edge(
                    GraphEdge(
                        id=edge_id,
                        a=routers[a],
                        b=routers[b],
                        kind="physical_link",
                        link_class=wan_class,
                        attrs={"length_km": weight, "role": "backbone"},
                    )
                )
            g.add_edge(
                GraphEdge(
                    id=f"wan:cc--{uplink_station.id}",
                    a=cc_router,
                    b=routers[uplink_station.id],
                    kind="physical_link",
                    link_class=wan_class,
                    attrs={
                        "length_km": euclidean(cc.coordinates, coords[uplink_station.id]),
                        "role": "uplink",
                    },
                )
            )
        else:  # mobile
            cell_size = max(1, int(bp.setting("mobile_cell_size", 5)))
            seed_count = math.ceil(len(ict_stations) / cell_size)
            seeds = farthest_point_seeds(coords, seed_count)
            core_id = "wan/core"
            g.add_node(
                GraphNode(
                    id=core_id,
                    kind="router",
                    zone="operation",
                    attrs={
                        "template": bp.infrastructure["core_router"],
                        "x": sum(coords[s][0] for s in seeds) / len(seeds),
                        "y": sum(coords[s][1] for s in seeds) / len(seeds),
                    },
                )
            )
            for seed in seeds:
                bs_id = f"wan/bs_{seed}"
                g.add_node(
                    GraphNode(
                        id=bs_id,
                        kind="base_station",
                        zone="operation",
                        attrs={
                            "template": bp.infrastructure["base_station"],
                            "x": coords[seed][0],
                            "y": coords[seed][1],
                        },
                    )
                )
                g.add_edge(
                    GraphEdge(
                        id=f"wan:bs_{seed}--core",
                        a=bs_id,
                        b=core_id,
                        kind="physical_link",
                        link_class=wan_class,
                        attrs={"role": "backbone"},
                    )
                )
            for station in ict_stations:
                modem_id = f"{station.id}/modem"
                g.add_node(
                    GraphNode(
                        id=modem_id,
                        kind="modem",
                        zone="station",
                        station=station.id,
                        attrs={"template": bp.infrastructure["modem"]},
                    )
                )
                g.add_edge(
                    GraphEdge(
                        id=f"lan:{station.id}/switch--{modem_id}",
                        a=f"{station.id}/switch",
                        b=modem_id,
                        kind="physical_link",
                        link_class=bp.lan_link_class,
                    )
                )
                nearest = min(
                    seeds, key=lambda seed: (euclidean(coords[station.id], coords[seed]), seed)
                )
                g.add_edge(
                    GraphEdge(
                        id=f"wan:{station.id}--bs_{nearest}",
                        a=modem_id,
                        b=f"wan/bs_{nearest}",
                        kind="physical_link",
                        link_class=wan_class,
                        attrs={
                            "length_km": euclidean(coords[station.id], coords[nearest]),
                            "role": "cell",
                        },
                    )
                )
            g.add_edge(
                GraphEdge(
                    id="wan:core--cc",
                    a=core_id,
                    b=cc_router,
                    kind="physical_link",
                    link_class=wan_class,
                    attrs={"role": "uplink"},
                )
            )

    _check_wan_connectivity(g, stations)
    _check_interface_count_rules(g, bp)
    _add_logical_connections(g, bp)
    return g


def _check_wan_connectivity(g: InfrastructureGraph, stations: tuple[Station, ...]) -> None:
    adjacency: dict[str, list[str]] = {}
    for edge in g.sorted_edges("physical_link"):
        adjacency.setdefault(edge.a, []).append(edge.b)
        adjacency.setdefault(edge.b, []).append(edge.a)
    rtus = [n.id for n in g.nodes_of_kind("rtu")]
    scada = [n.id for n in g.nodes_of_kind("scada_host")]
    relevant = rtus + scada
    if len(relevant) < 2:
        return
    components = connected_components(adjacency.keys(), adjacency)
    component_of = {}
    for i, comp in enumerate(components):
        for node in comp:
            component_of[node] = i
    home = component_of[scada[0]] if scada else component_of[relevant[0]]
    unreachable_stations = sorted(
        {g.nodes[rtu].station for rtu in rtus if component_of.get(rtu) != home}
    )
    if unreachable_stations:
        raise DisconnectedTopology(
            "stations unreachable from the control center: " + ", ".join(unreachable_stations),
            unreachable=unreachable_stations,
        )


def _check_interface_count_rules(g: InfrastructureGraph, bp: Blueprint) -> None:
    for node in g.sorted_nodes():
        template_name = node.attrs.get("template")
        if not template_name:
            continue
        template = bp.device_template(template_name)
        if template is None or template.interfaces == "degree":
            continue
        expected = int(template.interfaces.split(":", 1)[1])
        actual = g.physical_degree(node.id)
        if actual != expected:
            raise InvariantViolation(
                f"{node.id}: template '{template_name}' expects {expected} interfaces, has {actual}"
            )


def _add_logical_connections(g: InfrastructureGraph, bp: Blueprint) -> None:
    scada_nodes = g.nodes_of_kind("scada_host")
    rtus = g.nodes_of_kind("rtu")
    for proto in bp.protocol_specs:
        for scada in scada_nodes:
            if scada.zone not in proto.master_zones:
                continue
            for rtu in rtus:
                if rtu.zone not in proto.slave_zones:
                    continue
                if ZONE_RANK[scada.zone] <= ZONE_RANK[rtu.zone]:
                    continue
                g.add_edge(
                    GraphEdge(
                        id=f"log:{scada.id}--{rtu.id}",
                        a=scada.id,
                        b=rtu.id,
                        kind="logical_connection",
                        attrs={
                            "protocol": proto.name,
                            "port": proto.transport_port,
                            "master": scada.id,
                            "slave": rtu.id,
                        },
                    )
                )
        for rtu in rtus:
            if rtu.zone not in proto.master_zones:
                continue
            for ied in g.station_nodes(rtu.station):
                if ied.zone != "field" or ied.zone not in proto.slave_zones:
                    continue
                if ZONE_RANK[rtu.zone] <= ZONE_RANK[ied.zone]:
                    continue
                g.add_edge(
                    GraphEdge(
                        id=f"log:{rtu.id}--{ied.id}",
                        a=rtu.id,
                        b=ied.id,
                        kind="logical_connection",
                        attrs={
                            "protocol": proto.name,
                            "port": proto.transport_port,
                            "master": rtu.id,
                            "slave": ied.id,
                        },
                    )
                )


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------


def build_topology(
    grid: PowerGridModel, bp: Blueprint, paradigm: str | None = None
) -> tuple[InfrastructureGraph, tuple[Station, ...], list[str]]:
    """Run modeling steps 1-8 and return (graph, stations, notes)."""
    grid = grid_io.ensure_coordinates(grid)
    notes: list[str] = []
    g = instantiate_primary_objects(grid)
    g, stations = aggregate_stations(g, grid, bp)
    for station in stations:
        g = place_field_devices(g, station, bp, notes)
    for station in stations:
        g = build_station_lan(g, station, bp)
    for station in stations:
        g = place_rtu(g, station, bp)
    g = build_wan(g, stations, bp, paradigm=paradigm)
    return g, stations, notes
