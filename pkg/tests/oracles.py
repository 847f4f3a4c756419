"""Independent reference implementations used to cross-check the package.

Everything here is deliberately brute-force and shares no code with the
implementations under test: spanning trees come from exhaustive
enumeration, shortest paths from full simple-path search, and packet
delivery from a literal hop-by-hop walk over the installed tables.
"""

from __future__ import annotations

import random

import yaml


# ---------------------------------------------------------------------------
# spanning trees
# ---------------------------------------------------------------------------


def enumerate_spanning_trees(nodes, edges):
    """Yield every spanning tree as a list of edge tuples (id, a, b, w).

    Recursive include/exclude with cycle pruning; complete enumeration for
    the small instances used in tests."""
    nodes = sorted(set(nodes))
    need = len(nodes) - 1
    index = {n: i for i, n in enumerate(nodes)}

    def find(parent, x):
        while parent[x] != x:
            x = parent[x]
        return x

    def rec(pos, chosen, parent):
        if len(chosen) == need:
            yield list(chosen)
            return
        if pos >= len(edges) or len(chosen) + (len(edges) - pos) < need:
            return
        edge = edges[pos]
        ra, rb = find(parent, index[edge[1]]), find(parent, index[edge[2]])
        if ra != rb:
            new_parent = list(parent)
            new_parent[ra] = rb
            chosen.append(edge)
            yield from rec(pos + 1, chosen, new_parent)
            chosen.pop()
        yield from rec(pos + 1, chosen, parent)

    yield from rec(0, [], list(range(len(nodes))))


def best_spanning_tree(nodes, edges):
    """(total weight, sorted edge-id tuple) of the optimum spanning tree,
    with ties broken exactly as the production rule states: minimal sorted
    weight profile, then lexicographically smallest sorted edge-id set."""
    best = None
    for tree in enumerate_spanning_trees(nodes, edges):
        profile = tuple(sorted(e[3] for e in tree))
        ids = tuple(sorted(e[0] for e in tree))
        key = (profile, ids)
        if best is None or key < best:
            best = key
    if best is None:
        return None
    return sum(best[0]), best[1]


# ---------------------------------------------------------------------------
# shortest paths
# ---------------------------------------------------------------------------


def all_simple_paths(adjacency, src, dst, limit=None):
    paths = []
    stack = [(src, [src])]
    while stack:
        node, path = stack.pop()
        if node == dst:
            paths.append(tuple(path))
            continue
        if limit is not None and len(path) > limit:
            continue
        for neighbor, _edge in adjacency.get(node, ()):
            if neighbor not in path:
                stack.append((neighbor, path + [neighbor]))
    return paths


def best_path(adjacency, weight_of_edge, src, dst):
    """Optimal (weight, hops, node sequence) by full enumeration."""
    edge_lookup = {}
    for node, pairs in adjacency.items():
        for neighbor, edge in pairs:
            edge_lookup[(node, neighbor)] = edge
    best = None
    for path in all_simple_paths(adjacency, src, dst):
        weight = sum(weight_of_edge(edge_lookup[(a, b)]) for a, b in zip(path, path[1:]))
        key = (weight, len(path) - 1, path)
        if best is None or key < best:
            best = key
    return best


# ---------------------------------------------------------------------------
# forwarding simulation
# ---------------------------------------------------------------------------


class ForwardingOracle:
    """Walks packets hop by hop using only installed tables and subnets."""

    def __init__(self, graph, netcfg):
        self.graph = graph
        self.interfaces = netcfg.interfaces
        self.by_interface_id = netcfg.interface_by_id()
        self.subnet_of_interface = {}
        self.subnet_nodes = {}
        self.subnet_links = {}
        for subnet in netcfg.subnets:
            members = set(subnet.members)
            nodes = {self.by_interface_id[i].node for i in members}
            self.subnet_nodes[subnet.id] = nodes
            links = set()
            for edge in graph.sorted_edges("physical_link"):
                owners = []
                for itf_id in members:
                    itf = self.by_interface_id[itf_id]
                    if itf.edge == edge.id:
                        owners.append(itf.node)
                if len(owners) == 2:
                    links.add(edge.id)
            self.subnet_links[subnet.id] = links
            for itf_id in members:
                self.subnet_of_interface[itf_id] = subnet.id
        self.address_owner = {
            itf.address: itf.node for itf in self.by_interface_id.values() if itf.address
        }
        self.tables = {}
        for route in netcfg.routes:
            self.tables.setdefault(route.node, []).append(route)

    def node_subnets(self, node):
        return {self.subnet_of_interface[itf.id] for itf in self.interfaces.get(node, ())}

    def l2_walk(self, subnet_id, start, goal):
        """Unique layer-2 path inside one subnet (subnets are trees)."""
        links = self.subnet_links[subnet_id]
        adjacency = {}
        for edge_id in links:
            edge = self.graph.edges[edge_id]
            adjacency.setdefault(edge.a, []).append(edge.b)
            adjacency.setdefault(edge.b, []).append(edge.a)
        stack = [(start, [start])]
        while stack:
            node, path = stack.pop()
            if node == goal:
                return path
            for neighbor in sorted(adjacency.get(node, ())):
                if neighbor not in path:
                    stack.append((neighbor, path + [neighbor]))
        return None

    def deliver(self, src, dst_address):
        """Returns (delivered, traversed node sequence)."""
        current = src
        trace = [src]
        hops = 0
        max_hops = len(self.graph.nodes)
        dst_node = self.address_owner[dst_address]
        while current != dst_node:
            hops += 1
            if hops > max_hops:
                return False, trace
            shared = self.node_subnets(current) & self.node_subnets(dst_node)
            if shared:
                subnet_id = sorted(shared)[0]
                segment = self.l2_walk(subnet_id, current, dst_node)
                if segment is None:
                    return False, trace
                trace.extend(segment[1:])
                current = dst_node
                continue
            routes = self.tables.get(current, [])
            match = None
            for route in routes:
                prefix, length = route.destination.split("/")
                if length == "32" and prefix == dst_address:
                    match = route
                    break
            if match is None:
                match = next((r for r in routes if r.destination.endswith("/0")), None)
            if match is None:
                return False, trace
            hop_node = self.address_owner[match.next_hop]
            shared = self.node_subnets(current) & self.node_subnets(hop_node)
            if not shared:
                return False, trace
            segment = self.l2_walk(sorted(shared)[0], current, hop_node)
            if segment is None:
                return False, trace
            trace.extend(segment[1:])
            current = hop_node
        return True, trace


# ---------------------------------------------------------------------------
# random grid generation
# ---------------------------------------------------------------------------


def random_grid_document(seed: int, max_buses: int = 8) -> str:
    """A small random radial distribution grid as an interchange document."""
    rng = random.Random(seed)
    n = rng.randint(3, max_buses)
    buses = []
    taken = set()
    for i in range(n):
        while True:
            xy = (rng.randint(0, 30), rng.randint(0, 30))
            if xy not in taken:
                taken.add(xy)
                break
        buses.append(
            {
                "id": f"b{i}",
                "nominal_voltage_kv": 110.0 if i == 0 else 20.0,
                "coordinates": [float(xy[0]), float(xy[1])],
            }
        )
    doc = {
        "format": "grid-v1",
        "buses": buses,
        "branches": [],
        "transformers": [
            {"id": "t0", "hv_bus": "b0", "lv_bus": "b1", "tap_position": 0, "tap_min": -9, "tap_max": 9}
        ],
        "loads": [],
        "generators": [],
        "switches": [],
        "external_grid": {"bus": "b0"},
    }
    for i in range(2, n):
        parent = rng.randint(1, i - 1)
        doc["branches"].append(
            {
                "id": f"l{i}",
                "from_bus": f"b{parent}",
                "to_bus": f"b{i}",
                "length_km": round(rng.uniform(0.3, 3.0), 2),
                "kind": rng.choice(["cable", "line"]),
            }
        )
    for i in range(1, n):
        if rng.random() < 0.8:
            doc["loads"].append(
                {
                    "id": f"ld{i}",
                    "bus": f"b{i}",
                    "p_mw": round(rng.uniform(0.1, 1.0), 3),
                    "q_mvar": round(rng.uniform(0.0, 0.3), 3),
                }
            )
        if rng.random() < 0.3:
            doc["generators"].append(
                {"id": f"g{i}", "bus": f"b{i}", "p_mw": round(rng.uniform(0.02, 0.5), 3)}
            )
    return yaml.safe_dump(doc, sort_keys=False)
