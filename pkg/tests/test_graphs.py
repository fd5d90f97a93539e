import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from postwalk.graphs import (GraphSpec, NetworkGraph, build_grid_topology,
                             build_simple_topology, edge_list_csv, laplacian, remove_node)


def test_torus_5x5_is_4_regular():
    g = build_grid_topology(5, 5, "torus")
    assert g.n == 25
    assert np.all(g.degrees == 4)


def test_cylinder_5x5_boundary_degrees():
    g = build_grid_topology(5, 5, "cylinder")
    deg3 = np.nonzero(g.degrees == 3)[0]
    # the two open boundaries are the first and last rows
    assert sorted(deg3) == list(range(5)) + list(range(20, 25))
    assert np.all(g.degrees[5:20] == 4)


def test_torus_3x3_edge_set_matches_hand_enumeration():
    g = build_grid_topology(3, 3, "torus")
    # independent enumeration: each node connects to its four wrapped neighbours
    expected = set()
    for r in range(3):
        for c in range(3):
            k = 3 * r + c
            for rr, cc in ((r, (c + 1) % 3), ((r + 1) % 3, c)):
                expected.add(tuple(sorted((k, 3 * rr + cc))))
    assert set(g.edges) == expected
    assert len(g.edges) == 18
    assert np.all(g.degrees == 4)


def test_moebius_boundary_is_single_cycle():
    for rows, cols in ((5, 5), (4, 6), (3, 3)):
        g = build_grid_topology(rows, cols, "moebius")
        boundary = np.nonzero(g.degrees == 3)[0]
        assert boundary.size == 2 * cols
        sub = g.adjacency[np.ix_(boundary, boundary)]
        # one continuous cycle: 2-regular and connected
        assert np.all(sub.sum(axis=1) == 2)
        assert NetworkGraph(n=boundary.size, adjacency=sub).is_connected()


def test_cylinder_boundary_is_two_cycles():
    g = build_grid_topology(5, 5, "cylinder")
    boundary = np.nonzero(g.degrees == 3)[0]
    sub = g.adjacency[np.ix_(boundary, boundary)]
    assert np.all(sub.sum(axis=1) == 2)
    from scipy.sparse.csgraph import connected_components
    n_comp, _ = connected_components(sub, directed=False)
    assert n_comp == 2


def test_simple_topology_degree_patterns():
    assert build_simple_topology(6, "star").degrees.tolist() == [5, 1, 1, 1, 1, 1]
    assert build_simple_topology(6, "line").degrees.tolist() == [1, 2, 2, 2, 2, 1]
    two = build_simple_topology(2, "complete")
    assert two.degrees.tolist() == [1, 1]
    assert two.edges == [(0, 1)]
    assert build_simple_topology(6, "cycle").degrees.tolist() == [2] * 6


@pytest.mark.parametrize("rows,cols,kind", [(2, 5, "torus"), (5, 2, "cylinder"), (1, 1, "moebius")])
def test_grid_rejects_degenerate_sizes(rows, cols, kind):
    with pytest.raises(ValueError):
        build_grid_topology(rows, cols, kind)


@pytest.mark.parametrize("n,kind", [(1, "line"), (2, "cycle"), (1, "star"), (1, "complete")])
def test_simple_rejects_too_small(n, kind):
    with pytest.raises(ValueError):
        build_simple_topology(n, kind)


def test_remove_node_defected_torus_neighbour_degrees():
    g = build_grid_topology(5, 5, "torus")
    reduced, index_map = remove_node(g, 12)
    assert reduced.n == 24
    assert 12 not in index_map
    for orig in (7, 11, 13, 17):
        assert reduced.degrees[index_map[orig]] == 3
    others = [index_map[k] for k in range(25) if k not in (7, 11, 12, 13, 17)]
    assert np.all(reduced.degrees[others] == 4)


def test_remove_node_small_cases():
    path, _ = remove_node(build_simple_topology(3, "complete"), 0)
    assert path.degrees.tolist() == [1, 1]
    line, _ = remove_node(build_simple_topology(4, "cycle"), 0)
    assert line.degrees.tolist() == [1, 2, 1]


def test_remove_node_rejects_disconnection_and_bad_index():
    star = build_simple_topology(5, "star")
    with pytest.raises(ValueError, match="disconnect"):
        remove_node(star, 0)
    with pytest.raises(ValueError):
        remove_node(star, 7)


def test_remove_node_matches_bruteforce_submatrix():
    g = build_grid_topology(4, 5, "cylinder")
    for k in (0, 7, 19):
        reduced, index_map = remove_node(g, k)
        keep = [i for i in range(g.n) if i != k]
        expected_adj = g.adjacency[keep][:, keep]
        assert np.array_equal(reduced.adjacency, expected_adj)
        assert np.array_equal(laplacian(reduced),
                              np.diag(expected_adj.sum(1)) - expected_adj)
        assert [index_map[i] for i in keep] == list(range(g.n - 1))


def test_laplacian_cycle3_exact():
    H = laplacian(build_simple_topology(3, "cycle"))
    assert np.array_equal(H, np.array([[2, -1, -1], [-1, 2, -1], [-1, -1, 2]], dtype=float))


def test_laplacian_star6_hub_row():
    H = laplacian(build_simple_topology(6, "star"))
    assert H[0, 0] == 5
    assert np.all(H[0, 1:] == -1)


grid_kinds = st.sampled_from(["cylinder", "moebius", "torus"])
simple_kinds = st.sampled_from(["line", "cycle", "star", "complete"])


@settings(max_examples=40, deadline=None)
@given(rows=st.integers(3, 7), cols=st.integers(3, 7), kind=grid_kinds)
def test_grid_invariants(rows, cols, kind):
    g = build_grid_topology(rows, cols, kind)
    assert np.array_equal(g.adjacency, g.adjacency.T)
    assert np.all(np.diag(g.adjacency) == 0)
    assert g.is_connected()
    H = laplacian(g)
    assert np.all(H.sum(axis=1) == 0)
    assert np.array_equal(H, H.T)
    if kind == "torus":
        assert np.all(g.degrees == 4)
    else:
        assert int((g.degrees == 3).sum()) == 2 * cols
        assert int((g.degrees == 4).sum()) == g.n - 2 * cols


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 12), kind=simple_kinds)
def test_simple_invariants(n, kind):
    g = build_simple_topology(n, kind)
    assert g.is_connected()
    assert np.all(g.degrees == g.adjacency.sum(axis=1))
    H = laplacian(g)
    assert np.all(H.sum(axis=1) == 0)
    eigs = np.linalg.eigvalsh(H)
    assert eigs.min() > -1e-12


def test_laplacian_is_positive_semidefinite_on_grids():
    for kind in ("cylinder", "moebius", "torus"):
        H = laplacian(build_grid_topology(5, 5, kind))
        assert np.linalg.eigvalsh(H).min() > -1e-12


def test_graph_spec_builds_and_composes_defects():
    spec = GraphSpec(family="torus", rows=5, cols=5, defects=(12,))
    g, index_map = spec.build()
    assert g.n == 24
    assert index_map[13] == 12
    assert g.degrees[index_map[7]] == 3
    # double defect: indices stay original
    spec2 = GraphSpec(family="torus", rows=5, cols=5, defects=(12, 24))
    g2, map2 = spec2.build()
    assert g2.n == 23
    assert 12 not in map2 and 24 not in map2
    with pytest.raises(ValueError):
        GraphSpec(family="torus", rows=5, cols=5, defects=(12, 12)).build()


def test_graph_spec_validation():
    with pytest.raises(ValueError):
        GraphSpec(family="torus", n=6)
    with pytest.raises(ValueError):
        GraphSpec(family="star", rows=3, cols=3)
    with pytest.raises(ValueError):
        GraphSpec(family="hypercube", n=8)


def test_edge_list_csv_roundtrip():
    g = build_simple_topology(4, "cycle")
    text = edge_list_csv(g)
    lines = text.strip().splitlines()
    assert lines[0] == "src,dst"
    pairs = {tuple(map(int, ln.split(","))) for ln in lines[1:]}
    assert pairs == set(g.edges)


def test_adjacency_is_readonly():
    g = build_simple_topology(4, "line")
    with pytest.raises(ValueError):
        g.adjacency[0, 1] = 5
