"""Communication-network configuration: link parameters, interfaces, layer-2
subnets, address allocation, static routes and whitelist rules.

Everything here is a pure function of the built graph; repeated runs yield
identical MACs, addresses and tables.
"""

from __future__ import annotations

import hashlib
import ipaddress
from dataclasses import replace

from .algorithms import connected_components, shortest_path_tree
from .blueprint import Blueprint
from .errors import ConfigurationError, InvariantViolation
from .model import (
    DataPointMap,
    GraphEdge,
    InfrastructureGraph,
    Interface,
    L3_KINDS,
    NetworkConfiguration,
    Route,
    Subnet,
    WhitelistRule,
)

ROUTE_METRICS = ("latency", "hops", "inverse_bandwidth")
DEFAULT_ROUTE = "0.0.0.0/0"


# ---------------------------------------------------------------------------
# step 1: link parametrization
# ---------------------------------------------------------------------------


def parameterize_links(g: InfrastructureGraph, bp: Blueprint) -> InfrastructureGraph:
    """Copy bandwidth/latency/jitter/loss from each link's quality class."""
    g = g.copy()
    for edge in g.sorted_edges("physical_link"):
        link_class = bp.link_class(edge.link_class) if edge.link_class else None
        if link_class is None:
            raise ConfigurationError(
                f"physical link '{edge.id}' has unknown link class '{edge.link_class}'"
            )
        attrs = dict(edge.attrs)
        attrs.update(
            bandwidth_bps=link_class.bandwidth_bps,
            latency_ms=link_class.latency_ms,
            jitter_ms=link_class.jitter_ms,
            loss_rate=link_class.loss_rate,
        )
        g.update_edge(edge.id, attrs=attrs)
    return g


# ---------------------------------------------------------------------------
# step 2: interfaces
# ---------------------------------------------------------------------------


def _derive_mac(node_id: str, index: int) -> str:
    """Stable 48-bit id: hash of (node, index), locally administered, unicast."""
    digest = hashlib.sha256(f"{node_id}|{index}".encode()).digest()[:6]
    first = (digest[0] | 0x02) & 0xFE
    return ":".join(f"{b:02x}" for b in (first, *digest[1:]))


def init_interfaces(g: InfrastructureGraph) -> dict[str, tuple[Interface, ...]]:
    """One interface per incident physical link, ordered by sorted edge id."""
    interfaces: dict[str, tuple[Interface, ...]] = {}
    seen_macs: dict[str, str] = {}
    for node in g.sorted_nodes():
        incident = g.incident(node.id, "physical_link")
        if not incident:
            continue
        node_interfaces = []
        for index, edge in enumerate(sorted(incident, key=lambda e: e.id)):
            mac = _derive_mac(node.id, index)
            if mac in seen_macs:
                raise InvariantViolation(
                    f"MAC collision between {seen_macs[mac]} and {node.id}/if{index}"
                )
            seen_macs[mac] = f"{node.id}/if{index}"
            node_interfaces.append(
                Interface(id=f"{node.id}/if{index}", node=node.id, edge=edge.id, index=index, mac=mac)
            )
        interfaces[node.id] = tuple(node_interfaces)
    return interfaces


# ---------------------------------------------------------------------------
# step 3: layer-2 subnets
# ---------------------------------------------------------------------------


def split_subnets(
    g: InfrastructureGraph, interfaces: dict[str, tuple[Interface, ...]]
) -> tuple[Subnet, ...]:
    """Subnets are the components of the physical graph after deleting all
    routing/gateway nodes; each deleted node's interface joins the component
    it faces, and a link between two L3 nodes forms its own point-to-point
    subnet."""
    by_node_edge = {
        (itf.node, itf.edge): itf for node_ifs in interfaces.values() for itf in node_ifs
    }
    is_l3 = {node.id: node.kind in L3_KINDS for node in g.sorted_nodes()}

    adjacency: dict[str, list[str]] = {}
    for edge in g.sorted_edges("physical_link"):
        if is_l3[edge.a] or is_l3[edge.b]:
            continue
        adjacency.setdefault(edge.a, []).append(edge.b)
        adjacency.setdefault(edge.b, []).append(edge.a)
    non_l3_nodes = [nid for nid in interfaces if not is_l3[nid]]
    components = connected_components(non_l3_nodes, adjacency)
    component_index = {node: i for i, comp in enumerate(components) for node in comp}

    member_sets: list[set[str]] = [set() for _ in components]
    for node in non_l3_nodes:
        member_sets[component_index[node]].update(itf.id for itf in interfaces[node])
    point_to_point: list[set[str]] = []
    for edge in g.sorted_edges("physical_link"):
        a_l3, b_l3 = is_l3[edge.a], is_l3[edge.b]
        if a_l3 and b_l3:
            point_to_point.append(
                {by_node_edge[(edge.a, edge.id)].id, by_node_edge[(edge.b, edge.id)].id}
            )
        elif a_l3 != b_l3:
            l3_node, lan_node = (edge.a, edge.b) if a_l3 else (edge.b, edge.a)
            member_sets[component_index[lan_node]].add(by_node_edge[(l3_node, edge.id)].id)

    subnets = []
    for members in member_sets + point_to_point:
        if not members:
            continue
        ordered = tuple(sorted(members))
        subnets.append(Subnet(id=f"net:{ordered[0]}", members=ordered))
    return tuple(sorted(subnets, key=lambda s: s.id))


# ---------------------------------------------------------------------------
# step 4: addresses
# ---------------------------------------------------------------------------


def allocate_addresses(
    subnets: tuple[Subnet, ...],
    interfaces: dict[str, tuple[Interface, ...]],
    pool: str,
) -> tuple[tuple[Subnet, ...], dict[str, tuple[Interface, ...]]]:
    """Carve one /24 per subnet from the pool (in subnet-id order) and hand
    out host addresses from .1 upward in interface order."""
    network = ipaddress.ip_network(pool)
    if network.prefixlen > 24:
        raise ConfigurationError(f"address pool {pool} is smaller than a /24")
    available = 2 ** (24 - network.prefixlen)
    if len(subnets) > available:
        raise ConfigurationError(
            f"address pool exhausted: need {len(subnets)} /24 subnets, pool {pool} provides {available}"
        )

    by_id = {itf.id: itf for node_ifs in interfaces.values() for itf in node_ifs}
    updated: dict[str, Interface] = {}
    assigned_subnets = []
    prefix_iter = network.subnets(new_prefix=24)
    for subnet in sorted(subnets, key=lambda s: s.id):
        prefix = next(prefix_iter)
        usable = prefix.num_addresses - 2
        if len(subnet.members) > usable:
            raise ConfigurationError(
                f"address pool exhausted: subnet {subnet.id} needs {len(subnet.members)} host "
                f"addresses, {prefix} provides {usable}"
            )
        members = sorted(subnet.members, key=lambda iid: (by_id[iid].node, by_id[iid].index))
        for offset, interface_id in enumerate(members, start=1):
            address = str(prefix.network_address + offset)
            updated[interface_id] = replace(
                by_id[interface_id], address=address, prefix_len=prefix.prefixlen
            )
        assigned_subnets.append(replace(subnet, prefix=str(prefix)))

    new_interfaces = {
        node: tuple(updated.get(itf.id, itf) for itf in node_ifs)
        for node, node_ifs in interfaces.items()
    }
    addresses = [itf.address for ifs in new_interfaces.values() for itf in ifs if itf.address]
    if len(addresses) != len(set(addresses)):
        raise InvariantViolation("duplicate interface addresses after allocation")
    return tuple(assigned_subnets), new_interfaces


# ---------------------------------------------------------------------------
# step 5: routes
# ---------------------------------------------------------------------------


def _edge_weight_fn(g: InfrastructureGraph, metric: str):
    if metric not in ROUTE_METRICS:
        raise ConfigurationError(f"unknown route metric '{metric}'")

    def weight(edge_id: str) -> float:
        attrs = g.edges[edge_id].attrs
        if metric == "hops":
            return 1.0
        if metric == "inverse_bandwidth":
            return 1e9 / attrs["bandwidth_bps"]
        return attrs["latency_ms"]

    return weight


def compute_routes(
    g: InfrastructureGraph, metric: str = "latency"
) -> dict[str, tuple[str, ...]]:
    """Minimum-weight physical path for every logical connection.

    Ties resolve to fewer hops, then to the lexicographically smallest node
    sequence.  All connections sharing a master come from one shortest-path
    tree, so paths toward common targets never diverge.
    """
    adjacency = g.physical_adjacency()
    weight = _edge_weight_fn(g, metric)
    paths: dict[str, tuple[str, ...]] = {}
    by_master: dict[str, list[GraphEdge]] = {}
    for edge in g.sorted_edges("logical_connection"):
        by_master.setdefault(edge.attrs["master"], []).append(edge)
    for master in sorted(by_master):
        tree = shortest_path_tree(adjacency, master, weight)
        for edge in by_master[master]:
            slave = edge.attrs["slave"]
            if slave not in tree:
                raise ConfigurationError(
                    f"no physical path for logical connection '{edge.id}'"
                )
            paths[edge.id] = tree[slave][2]
    return paths


def _interface_on(interfaces, node: str, edge: str) -> Interface:
    for itf in interfaces[node]:
        if itf.edge == edge:
            return itf
    raise InvariantViolation(f"node {node} has no interface on link {edge}")


def _host_address(interfaces, node: str) -> str:
    node_ifs = interfaces.get(node, ())
    if not node_ifs or node_ifs[0].address is None:
        raise ConfigurationError(f"node {node} has no addressed interface")
    return node_ifs[0].address


def install_routes(
    g: InfrastructureGraph,
    paths: dict[str, tuple[str, ...]],
    interfaces: dict[str, tuple[Interface, ...]],
    subnets: tuple[Subnet, ...],
) -> tuple[Route, ...]:
    """Materialize host routes on every routing node along each path (both
    directions) plus a default-gateway entry per end host, then verify that
    no node ends up with conflicting next hops."""
    is_l3 = {node.id: node.kind in L3_KINDS for node in g.sorted_nodes()}
    by_id = {itf.id: itf for node_ifs in interfaces.values() for itf in node_ifs}

    table: dict[tuple[str, str], tuple[str, int]] = {}

    def register(owner: str, destination: str, next_hop: str, metric: int):
        key = (owner, destination)
        if key in table:
            existing_hop, existing_metric = table[key]
            if existing_hop != next_hop:
                raise InvariantViolation(
                    f"conflicting routes on {owner} for {destination}: "
                    f"{existing_hop} vs {next_hop}"
                )
            table[key] = (existing_hop, min(existing_metric, metric))
        else:
            table[key] = (next_hop, metric)

    def install_direction(path: tuple[str, ...]):
        dst = path[-1]
        dst_address = _host_address(interfaces, dst)
        edge_of_pair = {}
        for a, b in zip(path, path[1:]):
            for edge in g.incident(a, "physical_link"):
                if edge.other(a) == b:
                    edge_of_pair[(a, b)] = edge.id
                    break
        for i, node in enumerate(path[:-1]):
            if not is_l3[node]:
                continue
            for j in range(i + 1, len(path)):
                if is_l3[path[j]] or path[j] == dst:
                    facing = _interface_on(interfaces, path[j], edge_of_pair[(path[j - 1], path[j])])
                    register(node, f"{dst_address}/32", facing.address, len(path) - 1 - i)
                    break

    gateway_of_subnet: dict[str, str] = {}
    for subnet in subnets:
        l3_members = sorted(
            itf_id for itf_id in subnet.members if is_l3[by_id[itf_id].node]
        )
        if l3_members:
            gateway_of_subnet[subnet.id] = by_id[l3_members[0]].address

    subnet_of_interface = {
        itf_id: subnet for subnet in subnets for itf_id in subnet.members
    }

    for connection_id in sorted(paths):
        path = paths[connection_id]
        if len(path) < 2:
            continue
        install_direction(path)
        install_direction(tuple(reversed(path)))
        for host in (path[0], path[-1]):
            if is_l3[host]:
                continue
            subnet = subnet_of_interface[interfaces[host][0].id]
            gateway = gateway_of_subnet.get(subnet.id)
            if gateway is not None:
                register(host, DEFAULT_ROUTE, gateway, 0)

    return tuple(
        Route(node=owner, destination=dest, next_hop=hop, metric=metric)
        for (owner, dest), (hop, metric) in sorted(table.items())
    )


def configure_network(
    g: InfrastructureGraph, bp: Blueprint, metric: str = "latency"
) -> tuple[InfrastructureGraph, NetworkConfiguration]:
    """Run configuration steps 1-5 in order."""
    g = parameterize_links(g, bp)
    interfaces = init_interfaces(g)
    subnets = split_subnets(g, interfaces)
    subnets, interfaces = allocate_addresses(subnets, interfaces, bp.address_pool)
    paths = compute_routes(g, metric)
    routes = install_routes(g, paths, interfaces, subnets)
    return g, NetworkConfiguration(
        interfaces=interfaces, subnets=subnets, routes=routes, paths=paths
    )


# ---------------------------------------------------------------------------
# whitelist derivation
# ---------------------------------------------------------------------------


def derive_whitelist(
    g: InfrastructureGraph,
    interfaces: dict[str, tuple[Interface, ...]],
    datapoints: DataPointMap | None = None,
    application_detail: bool = True,
) -> tuple[WhitelistRule, ...]:
    """One allow-rule per logical connection.  With application detail the
    rule also pins the exact (COA, IOA, TypeID) set exchanged, which is the
    slave side's data-point table."""
    rules = []
    for edge in g.sorted_edges("logical_connection"):
        master, slave = edge.attrs["master"], edge.attrs["slave"]
        triples: tuple[tuple[int, int, str], ...] = ()
        if application_detail and datapoints is not None:
            triples = tuple(sorted(p.triple for p in datapoints.device_points(slave)))
        rules.append(
            WhitelistRule(
                connection=edge.id,
                src=_host_address(interfaces, master),
                dst=_host_address(interfaces, slave),
                protocol=edge.attrs["protocol"],
                port=edge.attrs["port"],
                direction="bidirectional",
                datapoints=triples,
            )
        )
    return tuple(
        sorted(
            rules,
            key=lambda r: (
                ipaddress.ip_address(r.src),
                ipaddress.ip_address(r.dst),
                r.port,
            ),
        )
    )
