"""Network graphs, centers, and BFS spanning trees with layer labels.

Protocols root a shortest-path spanning tree at a center (a vertex of
minimum eccentricity) and run one convergecast round per layer, where
layer(v) = depth - dist(root, v): leaves of maximal depth sit at layer 0
and the root at layer = depth.  All tie-breaking is by smallest vertex id
so runs are reproducible.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .streams import generator


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    m: int
    edges: tuple[tuple[int, int], ...]
    connected: bool

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.m)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        for nbrs in adj:
            nbrs.sort()
        return adj


@dataclass(frozen=True)
class SpanningTree:
    root: int
    parent: tuple[int, ...]
    children: tuple[tuple[int, ...], ...]
    layer: tuple[int, ...]
    depth: int

    @property
    def m(self) -> int:
        return len(self.parent)


def make_topology(m: int, edges) -> Topology:
    seen = set()
    cleaned = []
    for u, v in edges:
        if u == v:
            raise TopologyError(f"self-loop at vertex {u}")
        if not (0 <= u < m and 0 <= v < m):
            raise TopologyError(f"edge ({u},{v}) outside vertex range [0,{m})")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise TopologyError(f"duplicate edge {key}")
        seen.add(key)
        cleaned.append(key)
    cleaned.sort()
    g = Topology(m=m, edges=tuple(cleaned), connected=False)
    connected = m == 1 or min(_bfs_dist(g.adjacency(), 0)) >= 0
    return Topology(m=m, edges=tuple(cleaned), connected=connected)


def _bfs_dist(adj: list[list[int]], src: int) -> list[int]:
    dist = [-1] * len(adj)
    dist[src] = 0
    q = deque([src])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def eccentricities(g: Topology) -> list[int]:
    adj = g.adjacency()
    eccs = []
    for v in range(g.m):
        dist = _bfs_dist(adj, v)
        if min(dist) < 0:
            raise TopologyError("graph is disconnected")
        eccs.append(max(dist))
    return eccs


def center(g: Topology) -> int:
    """Vertex of minimum eccentricity, smallest id on ties."""
    eccs = eccentricities(g)
    return int(np.argmin(eccs))


def diameter(g: Topology) -> int:
    return max(eccentricities(g)) if g.m > 1 else 0


def spanning_tree(g: Topology, root: int) -> SpanningTree:
    """BFS shortest-path tree; children visited in ascending id order."""
    if not 0 <= root < g.m:
        raise TopologyError(f"root {root} not a vertex")
    adj = g.adjacency()
    dist = _bfs_dist(adj, root)
    if min(dist) < 0:
        raise TopologyError("graph is disconnected")
    parent = [-1] * g.m
    children: list[list[int]] = [[] for _ in range(g.m)]
    q = deque([root])
    seen = {root}
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                parent[v] = u
                children[u].append(v)
                q.append(v)
    depth = max(dist)
    layer = tuple(depth - d for d in dist)
    return SpanningTree(
        root=root,
        parent=tuple(parent),
        children=tuple(tuple(c) for c in children),
        layer=layer,
        depth=depth,
    )


# ---------------------------------------------------------------------------
# Generators.
# ---------------------------------------------------------------------------


def line(m: int) -> Topology:
    if m < 1:
        raise TopologyError("line needs m >= 1")
    return make_topology(m, [(i, i + 1) for i in range(m - 1)])


def star(m: int) -> Topology:
    """Hub at vertex 0 with m-1 leaves."""
    if m < 1:
        raise TopologyError("star needs m >= 1")
    return make_topology(m, [(0, i) for i in range(1, m)])


def balanced_binary(m: int) -> Topology:
    """Complete binary tree on ids 0..m-1 (children of i are 2i+1, 2i+2)."""
    if m < 1:
        raise TopologyError("tree needs m >= 1")
    edges = []
    for i in range(m):
        for c in (2 * i + 1, 2 * i + 2):
            if c < m:
                edges.append((i, c))
    return make_topology(m, edges)


def grid(rows: int, cols: int) -> Topology:
    if rows < 1 or cols < 1:
        raise TopologyError("grid needs rows, cols >= 1")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return make_topology(rows * cols, edges)


def random_connected(m: int, p_edge: float = 0.15, seed=0) -> Topology:
    """Random tree plus Bernoulli(p_edge) extra edges; always connected."""
    if m < 1:
        raise TopologyError("random topology needs m >= 1")
    rng = generator(seed, 0)
    edges = set()
    for v in range(1, m):
        u = int(rng.integers(0, v))
        edges.add((u, v))
    for u in range(m):
        for v in range(u + 1, m):
            if (u, v) not in edges and rng.random() < p_edge:
                edges.add((u, v))
    return make_topology(m, sorted(edges))


# ---------------------------------------------------------------------------
# File format and CLI topology specs.
# ---------------------------------------------------------------------------


def write_topology(g: Topology, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"{g.m}\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


def read_topology(path: str) -> Topology:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise TopologyError(f"{path}: empty topology file")
    m = int(lines[0])
    edges = []
    for ln in lines[1:]:
        u, v = ln.split()
        edges.append((int(u), int(v)))
    return make_topology(m, edges)


def from_spec(spec: str, m: int, seed=0) -> Topology:
    """Build a topology from a CLI spec.

    Accepted forms: ``line``, ``star``, ``tree``, ``grid`` (square-ish),
    ``grid:RxC``, ``random``, ``random:p``, ``file:PATH``.
    """
    kind, _, arg = spec.partition(":")
    if kind == "line":
        return line(m)
    if kind == "star":
        return star(m)
    if kind == "tree":
        return balanced_binary(m)
    if kind == "grid":
        if arg:
            r, c = arg.lower().split("x")
            return grid(int(r), int(c))
        r = int(np.sqrt(m))
        while m % r:
            r -= 1
        return grid(r, m // r)
    if kind == "random":
        p_edge = float(arg) if arg else 0.15
        return random_connected(m, p_edge, seed)
    if kind == "file":
        return read_topology(arg)
    raise TopologyError(f"unknown topology spec {spec!r}")
