"""Deterministic graph algorithms used by topology construction and routing.

These are implemented here rather than pulled from a graph library because
the tie-breaking rules are part of the output contract: identical inputs
must select identical edges and paths on every run and platform.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from typing import Callable, Iterable, Sequence

from .errors import DisconnectedTopology

# An edge for MST purposes: (edge id, node a, node b, weight)
WeightedEdge = tuple[str, str, str, float]


class UnionFind:
    def __init__(self, items: Iterable[str]):
        self.parent = {item: item for item in items}
        self.rank = {item: 0 for item in items}

    def find(self, item: str) -> str:
        root = item
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[item] != root:
            self.parent[item], item = root, self.parent[item]
        return root

    def union(self, a: str, b: str) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def _kruskal(nodes: Sequence[str], edges: Sequence[WeightedEdge], forced: Sequence[WeightedEdge]):
    """Minimum spanning tree containing all `forced` edges, or None if the
    candidates cannot span the nodes."""
    uf = UnionFind(nodes)
    chosen = []
    for edge in forced:
        if not uf.union(edge[1], edge[2]):
            return None
        chosen.append(edge)
    forced_ids = {edge[0] for edge in forced}
    for edge in sorted(edges, key=lambda e: (e[3], e[0])):
        if edge[0] in forced_ids:
            continue
        if uf.union(edge[1], edge[2]):
            chosen.append(edge)
    if len(chosen) != len(set(nodes)) - 1:
        return None
    return chosen


def connected_components(nodes: Iterable[str], adjacency: dict[str, list[str]]) -> list[list[str]]:
    """Sorted list of sorted components."""
    remaining = set(nodes)
    components = []
    while remaining:
        start = min(remaining)
        seen = {start}
        queue = deque([start])
        while queue:
            current = queue.popleft()
            for neighbor in adjacency.get(current, ()):
                if neighbor in remaining and neighbor not in seen:
                    seen.add(neighbor)
                    queue.append(neighbor)
        components.append(sorted(seen))
        remaining -= seen
    return components


def minimum_spanning_tree(nodes: Sequence[str], edges: Sequence[WeightedEdge]) -> tuple[str, ...]:
    """Edge ids of the minimum-weight spanning tree over `nodes`.

    Among all minimum-weight trees the one whose sorted edge-id sequence is
    lexicographically smallest is returned.  This is computed exactly: a
    first Kruskal pass fixes the optimal weight profile (every minimum tree
    has the same sorted weight multiset), then edges are admitted greedily
    in id order whenever a completion with the optimal profile still exists.
    Weight comparisons never sum floats, so no rounding slack is needed.
    """
    node_list = sorted(set(nodes))
    if len(node_list) <= 1:
        return ()
    base = _kruskal(node_list, edges, forced=())
    if base is None:
        adjacency: dict[str, list[str]] = {n: [] for n in node_list}
        for _, a, b, _w in edges:
            adjacency[a].append(b)
            adjacency[b].append(a)
        components = connected_components(node_list, adjacency)
        raise DisconnectedTopology(
            f"candidate graph is not connected; components: {components}",
            unreachable=[c[0] for c in components[1:]],
        )
    target_profile = sorted(edge[3] for edge in base)

    chosen: list[WeightedEdge] = []
    uf = UnionFind(node_list)
    for edge in sorted(edges, key=lambda e: e[0]):
        if uf.find(edge[1]) == uf.find(edge[2]):
            continue
        trial = _kruskal(node_list, edges, forced=[*chosen, edge])
        if trial is not None and sorted(e[3] for e in trial) == target_profile:
            chosen.append(edge)
            uf.union(edge[1], edge[2])
            if len(chosen) == len(node_list) - 1:
                break
    return tuple(sorted(edge[0] for edge in chosen))


def shortest_path_tree(
    adjacency: dict[str, list[tuple[str, str]]],
    source: str,
    edge_weight: Callable[[str], float],
) -> dict[str, tuple[float, int, tuple[str, ...]]]:
    """Dijkstra from `source` with a composite order.

    Paths are compared by (total weight, hop count, node-id sequence); the
    heap key embeds the full sequence so equal-weight equal-length paths
    resolve to the lexicographically smallest route.  Returns, per reachable
    node, the winning (weight, hops, path).
    """
    settled: dict[str, tuple[float, int, tuple[str, ...]]] = {}
    heap: list[tuple[float, int, tuple[str, ...]]] = [(0.0, 0, (source,))]
    while heap:
        dist, hops, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled[node] = (dist, hops, path)
        for neighbor, edge_id in adjacency.get(node, ()):
            if neighbor in settled:
                continue
            heapq.heappush(heap, (dist + edge_weight(edge_id), hops + 1, path + (neighbor,)))
    return settled


def euclidean(p: tuple[float, float], q: tuple[float, float]) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def farthest_point_seeds(points: dict[str, tuple[float, float]], count: int) -> list[str]:
    """Pick `count` well-spread point ids, starting from the smallest id.

    Each further seed maximizes the minimum distance to those already
    chosen; distance ties fall to the lexicographically smaller id.
    """
    ids = sorted(points)
    if count >= len(ids):
        return ids
    seeds = [ids[0]]
    while len(seeds) < count:
        best_id = None
        best_dist = -1.0
        for candidate in ids:
            if candidate in seeds:
                continue
            dist = min(euclidean(points[candidate], points[s]) for s in seeds)
            if dist > best_dist:
                best_dist = dist
                best_id = candidate
        seeds.append(best_id)
    return seeds
