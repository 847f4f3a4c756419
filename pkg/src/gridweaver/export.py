"""Deterministic serialization: graph files for visualization, the
simulator-ready network configuration, whitelist documents and the lossless
model document.

Every exporter sorts its records by id, so identical models produce
byte-identical files on every run and platform.
"""

from __future__ import annotations

import csv
import hashlib
import io
import warnings
from xml.sax.saxutils import escape, quoteattr

import yaml

from .blueprint import ProtocolSpec
from .errors import ConfigurationError, UnresolvedReference, VersionError
from .model import (
    MODEL_FORMAT,
    DataPoint,
    DataPointMap,
    CapacityViolation,
    FlowDemand,
    GraphEdge,
    GraphNode,
    InfraModel,
    InfrastructureGraph,
    Interface,
    LinkLoad,
    ModelMeta,
    NetworkConfiguration,
    PlanningResult,
    ReinforcementProposal,
    Route,
    Station,
    Subnet,
    WhitelistRule,
)

NETCONFIG_FORMAT = "netconfig-v1"

GRAPH_FORMATS = ("dot", "graphml")
WHITELIST_FORMATS = ("tabular", "rule-text")


def fingerprint_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _sorted_attrs(attrs: dict) -> dict:
    return {k: attrs[k] for k in sorted(attrs)}


# ---------------------------------------------------------------------------
# graph exports
# ---------------------------------------------------------------------------

_ZONE_FILL = {
    "process": "#d9d9d9",
    "field": "#c6dbef",
    "station": "#fdd0a2",
    "operation": "#c7e9c0",
}

_KIND_SHAPE = {
    "bus": "box",
    "transformer": "diamond",
    "load": "house",
    "generator": "doublecircle",
    "ied_control": "ellipse",
    "ied_measurement": "ellipse",
    "ied_protection": "ellipse",
    "rtu": "hexagon",
    "router": "octagon",
    "firewall": "Msquare",
    "modem": "parallelogram",
    "base_station": "invtriangle",
    "scada_host": "component",
}

_EDGE_STYLE = {
    "electrical": ("#636363", "solid"),
    "physical_link": ("#1f78b4", "bold"),
    "logical_connection": ("#e31a1c", "dashed"),
    "process_interface": ("#969696", "dotted"),
}


def _node_shape(node: GraphNode) -> str:
    if node.kind == "switch":
        return "triangle" if node.zone == "process" else "box3d"
    return _KIND_SHAPE.get(node.kind, "ellipse")


def _dot_quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _export_dot(g: InfrastructureGraph) -> str:
    lines = ["graph infrastructure {", "  graph [overlap=false];"]
    for node in g.sorted_nodes():
        lines.append(
            f"  {_dot_quote(node.id)} [label={_dot_quote(node.id)} "
            f"shape={_node_shape(node)} style=filled "
            f"fillcolor={_dot_quote(_ZONE_FILL[node.zone])}];"
        )
    for edge in g.sorted_edges():
        color, style = _EDGE_STYLE[edge.kind]
        lines.append(
            f"  {_dot_quote(edge.a)} -- {_dot_quote(edge.b)} "
            f"[color={_dot_quote(color)} style={style}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def _export_graphml(g: InfrastructureGraph) -> str:
    lines = [
        "<?xml version='1.0' encoding='utf-8'?>",
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="d0" for="node" attr.name="kind" attr.type="string"/>',
        '  <key id="d1" for="node" attr.name="zone" attr.type="string"/>',
        '  <key id="d2" for="node" attr.name="station" attr.type="string"/>',
        '  <key id="d3" for="edge" attr.name="kind" attr.type="string"/>',
        '  <key id="d4" for="edge" attr.name="link_class" attr.type="string"/>',
        '  <graph id="infrastructure" edgedefault="undirected">',
    ]
    for node in g.sorted_nodes():
        lines.append(f"    <node id={quoteattr(node.id)}>")
        lines.append(f'      <data key="d0">{escape(node.kind)}</data>')
        lines.append(f'      <data key="d1">{escape(node.zone)}</data>')
        if node.station:
            lines.append(f'      <data key="d2">{escape(node.station)}</data>')
        lines.append("    </node>")
    for edge in g.sorted_edges():
        lines.append(
            f"    <edge id={quoteattr(edge.id)} source={quoteattr(edge.a)} "
            f"target={quoteattr(edge.b)}>"
        )
        lines.append(f'      <data key="d3">{escape(edge.kind)}</data>')
        if edge.link_class:
            lines.append(f'      <data key="d4">{escape(edge.link_class)}</data>')
        lines.append("    </edge>")
    lines.extend(["  </graph>", "</graphml>"])
    return "\n".join(lines) + "\n"


def export_graph(g: InfrastructureGraph, fmt: str) -> str:
    """Render the graph for visualization; nodes are styled by kind and
    zone, edges by relation kind."""
    if fmt == "dot":
        return _export_dot(g)
    if fmt == "graphml":
        return _export_graphml(g)
    raise ConfigurationError(f"unknown graph format '{fmt}' (supported: {GRAPH_FORMATS})")


# ---------------------------------------------------------------------------
# network configuration export
# ---------------------------------------------------------------------------


def export_network_config(model: InfraModel) -> str:
    """The simulator-facing document: every ICT node with its interfaces and
    addresses, every link with quality parameters, routing tables, the
    per-device data-point tables and one application entry per logical
    connection."""
    missing = []
    if model.netcfg is None:
        missing.append("netconfig")
    if model.datapoints is None:
        missing.append("datapoints")
    if missing:
        raise ConfigurationError(
            "model is incomplete for network-config export; missing stages: " + ", ".join(missing)
        )

    netcfg = model.netcfg
    nodes = []
    for node in model.graph.sorted_nodes():
        if node.zone == "process":
            continue
        nodes.append(
            {
                "id": node.id,
                "kind": node.kind,
                "zone": node.zone,
                "station": node.station,
                "interfaces": [
                    {
                        "id": itf.id,
                        "mac": itf.mac,
                        "address": itf.address,
                        "prefix_len": itf.prefix_len,
                        "link": itf.edge,
                    }
                    for itf in netcfg.interfaces.get(node.id, ())
                ],
            }
        )

    links = []
    for edge in model.graph.sorted_edges("physical_link"):
        links.append(
            {
                "id": edge.id,
                "endpoints": [edge.a, edge.b],
                "link_class": edge.link_class,
                "bandwidth_bps": edge.attrs["bandwidth_bps"],
                "latency_ms": edge.attrs["latency_ms"],
                "jitter_ms": edge.attrs["jitter_ms"],
                "loss_rate": edge.attrs["loss_rate"],
            }
        )

    routes: dict[str, list[dict]] = {}
    for route in netcfg.routes:
        routes.setdefault(route.node, []).append(
            {"destination": route.destination, "next_hop": route.next_hop, "metric": route.metric}
        )

    applications = []
    for edge in model.graph.sorted_edges("logical_connection"):
        slave_points = model.datapoints.device_points(edge.attrs["slave"])
        applications.append(
            {
                "connection": edge.id,
                "protocol": edge.attrs["protocol"],
                "port": edge.attrs["port"],
                "master": edge.attrs["master"],
                "slave": edge.attrs["slave"],
                "datapoints": [
                    {"coa": p.coa, "ioa": p.ioa, "type_id": p.type_id, "cot": p.cot, "direction": p.direction}
                    for p in slave_points
                ],
            }
        )

    datapoints = {
        device: [
            {
                "coa": p.coa,
                "ioa": p.ioa,
                "type_id": p.type_id,
                "cot": p.cot,
                "direction": p.direction,
                "category": p.category,
                "source": f"{p.source_node}.{p.source_attr}",
                "size_bytes": p.size_bytes,
            }
            for p in model.datapoints.points[device]
        ]
        for device in sorted(model.datapoints.points)
    }

    subnets = [
        {"id": s.id, "prefix": s.prefix, "members": list(s.members)} for s in netcfg.subnets
    ]

    document = {
        "format": NETCONFIG_FORMAT,
        "nodes": nodes,
        "links": links,
        "subnets": subnets,
        "routes": {node: routes[node] for node in sorted(routes)},
        "applications": applications,
        "datapoints": datapoints,
    }
    return yaml.safe_dump(document, sort_keys=True)


# ---------------------------------------------------------------------------
# whitelist export
# ---------------------------------------------------------------------------


def export_whitelist(rules: tuple[WhitelistRule, ...], fmt: str) -> str:
    if fmt == "tabular":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["src", "dst", "protocol", "port", "direction", "connection", "datapoints"])
        for rule in rules:
            writer.writerow(
                [
                    rule.src,
                    rule.dst,
                    rule.protocol,
                    rule.port,
                    rule.direction,
                    rule.connection,
                    ";".join(f"{c}/{i}/{t}" for c, i, t in rule.datapoints),
                ]
            )
        return buffer.getvalue()
    if fmt == "rule-text":
        lines = ["# communication allow-list; traffic not matched here is an anomaly"]
        for rule in rules:
            lines.append(
                f"allow {rule.protocol} {rule.src} -> {rule.dst} port {rule.port}"
                f"  # {rule.connection}"
            )
            for coa, ioa, type_id in rule.datapoints:
                lines.append(f"  datapoint {coa}/{ioa} {type_id}")
        return "\n".join(lines) + "\n"
    raise ConfigurationError(f"unknown whitelist format '{fmt}' (supported: {WHITELIST_FORMATS})")


# ---------------------------------------------------------------------------
# model document (save / load)
# ---------------------------------------------------------------------------


def _datapoint_to_dict(p: DataPoint) -> dict:
    return {
        "coa": p.coa,
        "ioa": p.ioa,
        "type_id": p.type_id,
        "cot": p.cot,
        "direction": p.direction,
        "category": p.category,
        "source_node": p.source_node,
        "source_attr": p.source_attr,
        "size_bytes": p.size_bytes,
        "device": p.device,
        "lineage": list(p.lineage),
    }


def _datapoint_from_dict(d: dict) -> DataPoint:
    return DataPoint(
        coa=d["coa"],
        ioa=d["ioa"],
        type_id=d["type_id"],
        cot=d["cot"],
        direction=d["direction"],
        category=d["category"],
        source_node=d["source_node"],
        source_attr=d["source_attr"],
        size_bytes=d["size_bytes"],
        device=d["device"],
        lineage=tuple(d["lineage"]),
    )


def save_model(model: InfraModel) -> str:
    """Lossless YAML document; `load_model` restores an equal value."""
    doc: dict = {"format": MODEL_FORMAT}
    doc["meta"] = {
        "grid_fingerprint": model.meta.grid_fingerprint,
        "blueprint_fingerprint": model.meta.blueprint_fingerprint,
        "wan_paradigm": model.meta.wan_paradigm,
        "route_metric": model.meta.route_metric,
        "settings": _sorted_attrs(model.meta.settings),
        "protocols": [
            {
                "name": p.name,
                "transport_port": p.transport_port,
                "cycle_seconds": p.cycle_seconds,
                "payload_bytes_per_point": p.payload_bytes_per_point,
                "master_zones": list(p.master_zones),
                "slave_zones": list(p.slave_zones),
            }
            for p in model.meta.protocols
        ],
    }
    doc["nodes"] = [
        {
            "id": n.id,
            "kind": n.kind,
            "zone": n.zone,
            **({"station": n.station} if n.station else {}),
            "attrs": _sorted_attrs(n.attrs),
        }
        for n in model.graph.sorted_nodes()
    ]
    doc["edges"] = [
        {
            "id": e.id,
            "a": e.a,
            "b": e.b,
            "kind": e.kind,
            **({"link_class": e.link_class} if e.link_class else {}),
            "attrs": _sorted_attrs(e.attrs),
        }
        for e in model.graph.sorted_edges()
    ]
    doc["stations"] = [
        {
            "id": s.id,
            "class": s.station_class,
            "primary_members": list(s.primary_members),
            "bus_group": list(s.bus_group),
            "coordinates": [s.coordinates[0], s.coordinates[1]],
            "control_center": s.control_center,
        }
        for s in model.stations
    ]
    if model.netcfg is not None:
        doc["interfaces"] = {
            node: [
                {
                    "id": itf.id,
                    "edge": itf.edge,
                    "index": itf.index,
                    "mac": itf.mac,
                    "address": itf.address,
                    "prefix_len": itf.prefix_len,
                }
                for itf in model.netcfg.interfaces[node]
            ]
            for node in sorted(model.netcfg.interfaces)
        }
        doc["subnets"] = [
            {"id": s.id, "prefix": s.prefix, "members": list(s.members)}
            for s in model.netcfg.subnets
        ]
        doc["routes"] = [
            {"node": r.node, "destination": r.destination, "next_hop": r.next_hop, "metric": r.metric}
            for r in model.netcfg.routes
        ]
        doc["paths"] = {
            conn: list(model.netcfg.paths[conn]) for conn in sorted(model.netcfg.paths)
        }
    if model.datapoints is not None:
        doc["datapoints"] = {
            device: [_datapoint_to_dict(p) for p in model.datapoints.points[device]]
            for device in sorted(model.datapoints.points)
        }
        doc["datapoint_sources"] = [
            {"node": node, "attr": attr, "devices": list(devices)}
            for (node, attr), devices in sorted(model.datapoints.sources.items())
        ]
    if model.whitelist is not None:
        doc["whitelist"] = [
            {
                "connection": r.connection,
                "src": r.src,
                "dst": r.dst,
                "protocol": r.protocol,
                "port": r.port,
                "direction": r.direction,
                "datapoints": [[c, i, t] for c, i, t in r.datapoints],
            }
            for r in model.whitelist
        ]
    if model.planning is not None:
        doc["planning"] = {
            "flows": [
                {
                    "connection": f.connection,
                    "bytes_per_cycle": f.bytes_per_cycle,
                    "cycle_seconds": f.cycle_seconds,
                    "mean_bps": f.mean_bps,
                    "burst_bps": f.burst_bps,
                }
                for f in model.planning.flows
            ],
            "loads": [
                {
                    "link": l.link,
                    "mean_bps": l.mean_bps,
                    "burst_bps": l.burst_bps,
                    "utilization": l.utilization,
                }
                for l in model.planning.loads
            ],
            "violations": [
                {
                    "link": v.link,
                    "burst_bps": v.burst_bps,
                    "bandwidth_bps": v.bandwidth_bps,
                    "threshold": v.threshold,
                }
                for v in model.planning.violations
            ],
            "proposals": [
                {
                    "candidate": p.candidate,
                    "stations": list(p.stations),
                    "distance_km": p.distance_km,
                    "relieves": p.relieves,
                    "burst_reduction_bps": p.burst_reduction_bps,
                }
                for p in model.planning.proposals
            ],
            "notes": list(model.planning.notes),
        }
    return yaml.safe_dump(doc, sort_keys=False)


def load_model(
    text: str,
    expect_grid_fingerprint: str | None = None,
    expect_blueprint_fingerprint: str | None = None,
) -> InfraModel:
    """Restore a model document; raises VersionError for other format
    versions and fails on dangling references (tampered documents)."""
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise VersionError(
            f"unsupported model document version {doc.get('format') if isinstance(doc, dict) else None!r}; "
            f"expected '{MODEL_FORMAT}'"
        )

    meta_doc = doc["meta"]
    meta = ModelMeta(
        format_version=MODEL_FORMAT,
        grid_fingerprint=meta_doc["grid_fingerprint"],
        blueprint_fingerprint=meta_doc["blueprint_fingerprint"],
        wan_paradigm=meta_doc["wan_paradigm"],
        route_metric=meta_doc["route_metric"],
        settings=meta_doc.get("settings", {}),
        protocols=tuple(
            ProtocolSpec(
                name=p["name"],
                transport_port=p["transport_port"],
                cycle_seconds=p["cycle_seconds"],
                payload_bytes_per_point=p["payload_bytes_per_point"],
                master_zones=tuple(p["master_zones"]),
                slave_zones=tuple(p["slave_zones"]),
            )
            for p in meta_doc.get("protocols", [])
        ),
    )
    for expected, actual, label in (
        (expect_grid_fingerprint, meta.grid_fingerprint, "grid"),
        (expect_blueprint_fingerprint, meta.blueprint_fingerprint, "blueprint"),
    ):
        if expected is not None and expected != actual:
            warnings.warn(
                f"{label} fingerprint mismatch: document carries {actual}, inputs give {expected}",
                stacklevel=2,
            )

    graph = InfrastructureGraph()
    for n in doc.get("nodes", []):
        graph.add_node(
            GraphNode(
                id=n["id"], kind=n["kind"], zone=n["zone"], station=n.get("station"), attrs=n["attrs"]
            )
        )
    for e in doc.get("edges", []):
        graph.add_edge(
            GraphEdge(
                id=e["id"],
                a=e["a"],
                b=e["b"],
                kind=e["kind"],
                link_class=e.get("link_class"),
                attrs=e["attrs"],
            )
        )

    stations = tuple(
        Station(
            id=s["id"],
            station_class=s["class"],
            primary_members=tuple(s["primary_members"]),
            bus_group=tuple(s["bus_group"]),
            coordinates=(s["coordinates"][0], s["coordinates"][1]),
            control_center=s["control_center"],
        )
        for s in doc.get("stations", [])
    )
    for station in stations:
        for member in station.primary_members:
            if member not in graph.nodes:
                raise UnresolvedReference(f"station {station.id} references missing node '{member}'")

    netcfg = None
    if "interfaces" in doc:
        interfaces = {}
        for node, entries in doc["interfaces"].items():
            if node not in graph.nodes:
                raise UnresolvedReference(f"interfaces reference missing node '{node}'")
            interfaces[node] = tuple(
                Interface(
                    id=i["id"],
                    node=node,
                    edge=i["edge"],
                    index=i["index"],
                    mac=i["mac"],
                    address=i.get("address"),
                    prefix_len=i.get("prefix_len"),
                )
                for i in entries
            )
        subnets = tuple(
            Subnet(id=s["id"], members=tuple(s["members"]), prefix=s.get("prefix"))
            for s in doc.get("subnets", [])
        )
        routes = tuple(
            Route(
                node=r["node"],
                destination=r["destination"],
                next_hop=r["next_hop"],
                metric=r["metric"],
            )
            for r in doc.get("routes", [])
        )
        for route in routes:
            if route.node not in graph.nodes:
                raise UnresolvedReference(f"route references missing node '{route.node}'")
        paths = {conn: tuple(nodes) for conn, nodes in doc.get("paths", {}).items()}
        for conn, path in paths.items():
            if conn not in graph.edges:
                raise UnresolvedReference(f"path references missing connection '{conn}'")
            for node in path:
                if node not in graph.nodes:
                    raise UnresolvedReference(f"path {conn} references missing node '{node}'")
        netcfg = NetworkConfiguration(
            interfaces=interfaces, subnets=subnets, routes=routes, paths=paths
        )

    datapoints = None
    if "datapoints" in doc:
        points = {}
        for device, entries in doc["datapoints"].items():
            if device not in graph.nodes:
                raise UnresolvedReference(f"datapoints reference missing device '{device}'")
            points[device] = tuple(_datapoint_from_dict(p) for p in entries)
        sources = {
            (s["node"], s["attr"]): tuple(s["devices"])
            for s in doc.get("datapoint_sources", [])
        }
        datapoints = DataPointMap(points=points, sources=sources)

    whitelist = None
    if "whitelist" in doc:
        whitelist = tuple(
            WhitelistRule(
                connection=r["connection"],
                src=r["src"],
                dst=r["dst"],
                protocol=r["protocol"],
                port=r["port"],
                direction=r["direction"],
                datapoints=tuple((c, i, t) for c, i, t in r["datapoints"]),
            )
            for r in doc["whitelist"]
        )
        for rule in whitelist:
            if rule.connection not in graph.edges:
                raise UnresolvedReference(
                    f"whitelist references missing connection '{rule.connection}'"
                )

    planning = None
    if "planning" in doc:
        p = doc["planning"]
        planning = PlanningResult(
            flows=tuple(
                FlowDemand(
                    connection=f["connection"],
                    bytes_per_cycle=f["bytes_per_cycle"],
                    cycle_seconds=f["cycle_seconds"],
                    mean_bps=f["mean_bps"],
                    burst_bps=f["burst_bps"],
                )
                for f in p.get("flows", [])
            ),
            loads=tuple(
                LinkLoad(
                    link=l["link"],
                    mean_bps=l["mean_bps"],
                    burst_bps=l["burst_bps"],
                    utilization=l["utilization"],
                )
                for l in p.get("loads", [])
            ),
            violations=tuple(
                CapacityViolation(
                    link=v["link"],
                    burst_bps=v["burst_bps"],
                    bandwidth_bps=v["bandwidth_bps"],
                    threshold=v["threshold"],
                )
                for v in p.get("violations", [])
            ),
            proposals=tuple(
                ReinforcementProposal(
                    candidate=q["candidate"],
                    stations=(q["stations"][0], q["stations"][1]),
                    distance_km=q["distance_km"],
                    relieves=q["relieves"],
                    burst_reduction_bps=q["burst_reduction_bps"],
                )
                for q in p.get("proposals", [])
            ),
            notes=tuple(p.get("notes", [])),
        )

    return InfraModel(
        meta=meta,
        graph=graph,
        stations=stations,
        netcfg=netcfg,
        datapoints=datapoints,
        whitelist=whitelist,
        planning=planning,
    )
