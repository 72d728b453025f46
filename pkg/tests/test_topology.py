"""Topology construction, center/diameter, spanning trees, and file I/O."""

from collections import deque

import pytest

from sketchcast.topology import (
    Topology,
    TopologyError,
    balanced_binary,
    center,
    diameter,
    eccentricities,
    from_spec,
    grid,
    line,
    make_topology,
    random_connected,
    read_topology,
    spanning_tree,
    star,
    write_topology,
)


def bfs_distances(g: Topology, src: int) -> list[int]:
    """Plain BFS, independent of the module's internals."""
    adj = [[] for _ in range(g.m)]
    for u, v in g.edges:
        adj[u].append(v)
        adj[v].append(u)
    dist = [-1] * g.m
    dist[src] = 0
    q = deque([src])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


SAMPLES = [
    line(1),
    line(5),
    line(9),
    star(2),
    star(9),
    balanced_binary(10),
    grid(3, 3),
    grid(4, 5),
    random_connected(20, 0.2, seed=3),
    random_connected(12, 0.05, seed=8),
]


def test_make_topology_rejects_self_loops():
    with pytest.raises(TopologyError):
        make_topology(3, [(0, 0)])


def test_make_topology_rejects_out_of_range():
    with pytest.raises(TopologyError):
        make_topology(3, [(0, 3)])
    with pytest.raises(TopologyError):
        make_topology(3, [(-1, 2)])


def test_make_topology_rejects_duplicates():
    with pytest.raises(TopologyError):
        make_topology(3, [(0, 1), (1, 0)])


def test_edges_are_canonicalized():
    g = make_topology(4, [(2, 1), (3, 0)])
    assert g.edges == ((0, 3), (1, 2))


def test_disconnected_graph_is_flagged_and_unusable():
    g = make_topology(4, [(0, 1), (2, 3)])
    assert not g.connected
    with pytest.raises(TopologyError):
        eccentricities(g)
    with pytest.raises(TopologyError):
        spanning_tree(g, 0)


def test_center_examples():
    assert center(line(5)) == 2
    assert center(star(9)) == 0
    assert center(grid(3, 3)) == 4


def test_center_is_brute_force_argmin():
    for g in SAMPLES:
        eccs = [max(bfs_distances(g, v)) for v in range(g.m)]
        assert center(g) == eccs.index(min(eccs))


def test_diameter_examples():
    assert diameter(star(9)) == 2
    assert diameter(line(100)) == 99
    assert diameter(grid(4, 5)) == 7


def test_diameter_matches_all_pairs_bfs():
    for g in SAMPLES:
        assert diameter(g) == max(max(bfs_distances(g, v)) for v in range(g.m))


def test_line_tree_rooted_at_center():
    tree = spanning_tree(line(5), 2)
    assert tree.depth == 2
    assert tree.layer[0] == tree.layer[4] == 0
    assert tree.parent[0] == 1 and tree.parent[4] == 3


def test_star_tree_rooted_at_hub():
    tree = spanning_tree(star(9), 0)
    assert tree.depth == 1
    assert all(tree.layer[v] == 0 for v in range(1, 9))
    assert tree.children[0] == tuple(range(1, 9))


def test_tree_distances_equal_bfs_distances():
    g = random_connected(20, 0.2, seed=42)
    tree = spanning_tree(g, 0)
    dist = bfs_distances(g, 0)
    for v in range(g.m):
        hops = 0
        u = v
        while u != 0:
            u = tree.parent[u]
            hops += 1
        assert hops == dist[v]


def test_layer_partition_and_parent_layers():
    for g in SAMPLES:
        tree = spanning_tree(g, center(g))
        assert len(tree.layer) == g.m
        for v in range(g.m):
            if v != tree.root:
                assert tree.layer[tree.parent[v]] == tree.layer[v] + 1
        assert tree.layer[tree.root] == tree.depth


def test_center_depth_brackets_diameter():
    for g in SAMPLES:
        tree = spanning_tree(g, center(g))
        ecc = max(bfs_distances(g, center(g)))
        assert tree.depth == ecc <= diameter(g) <= 2 * ecc


def test_random_connected_is_connected():
    for seed in range(5):
        assert random_connected(15, 0.0, seed=seed).connected


def test_topology_file_round_trip(tmp_path):
    g = grid(3, 4)
    path = tmp_path / "g.txt"
    write_topology(g, path)
    assert read_topology(path) == g


def test_read_topology_rejects_empty(tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("")
    with pytest.raises(TopologyError):
        read_topology(path)


def test_from_spec_forms(tmp_path):
    assert from_spec("line", 5) == line(5)
    assert from_spec("star", 6) == star(6)
    assert from_spec("tree", 7) == balanced_binary(7)
    assert from_spec("grid:2x3", 6) == grid(2, 3)
    assert from_spec("grid", 12).m == 12
    assert from_spec("random:0.3", 10, seed=1) == random_connected(10, 0.3, seed=1)
    path = tmp_path / "t.txt"
    write_topology(line(4), path)
    assert from_spec(f"file:{path}", 4) == line(4)


def test_from_spec_rejects_unknown():
    with pytest.raises(TopologyError):
        from_spec("torus", 4)
