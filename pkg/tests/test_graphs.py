import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.sparse.csgraph import connected_components

from robust_consensus.exceptions import GraphGenerationError, ParameterError
from robust_consensus.graphs import (
    Graph,
    build_named,
    build_random,
    component_count,
    format_edge_list,
    is_connected,
    lambda2_closed_form,
    laplacian_eigenvalues,
    parse_edge_list,
    read_edge_list,
    spectrum,
    write_edge_list,
)
from oracles import bfs_connected


def test_complete_five():
    g = build_named("complete", 5)
    assert g.edge_count == 10
    assert set(g.degrees.tolist()) == {4}


def test_ring_four():
    g = build_named("ring", 4)
    assert g.edge_count == 4
    assert g.degrees.tolist() == [2, 2, 2, 2]


def test_star_six():
    g = build_named("star", 6)
    assert g.edge_count == 5
    assert g.degrees[0] == 5
    assert g.degrees[1:].tolist() == [1] * 5
    assert g.d_max == 5


@pytest.mark.parametrize("family, n, expected", [
    ("complete", 5, 5.0),
    ("ring", 8, 4 * math.sin(math.pi / 8) ** 2),
    ("line", 3, 1.0),
])
def test_lambda2_table_values(family, n, expected):
    assert spectrum(build_named(family, n)).lambda2 == pytest.approx(expected, rel=1e-12)


def test_ring_eight_numeric():
    assert spectrum(build_named("ring", 8)).lambda2 == pytest.approx(0.5858, abs=1e-4)


@pytest.mark.parametrize("family", ["complete", "star", "ring", "line", "tree"])
@pytest.mark.parametrize("n", [5, 6, 11, 32, 57])
def test_closed_forms(family, n):
    got = spectrum(build_named(family, n)).lambda2
    assert got == pytest.approx(lambda2_closed_form(family, n), rel=1e-9)


@pytest.mark.parametrize("k", [2, 4, 6, 8])
@pytest.mark.parametrize("n", [9, 10, 23, 64])
def test_lattice_closed_form(n, k):
    g = build_named("k_regular_lattice", n, k=k)
    assert set(g.degrees.tolist()) == {k}
    assert spectrum(g).lambda2 == pytest.approx(
        lambda2_closed_form("k_regular_lattice", n, k=k), rel=1e-9)


@pytest.mark.parametrize("p, q", [(1, 3), (2, 2), (3, 7), (10, 4)])
def test_bipartite(p, q):
    g = build_named("bipartite_complete", p=p, q=q)
    assert g.n == p + q and g.edge_count == p * q
    assert spectrum(g).lambda2 == pytest.approx(min(p, q), rel=1e-9)


def test_bipartite_size_mismatch():
    with pytest.raises(ParameterError):
        build_named("bipartite_complete", 6, p=2, q=3)


@pytest.mark.parametrize("n", [4, 8, 16, 30])
def test_cubic_is_three_regular(n):
    g = build_named("cubic", n)
    assert set(g.degrees.tolist()) == {3}
    assert is_connected(g)


@pytest.mark.parametrize("family, kwargs", [
    ("cubic", {"n": 7}),
    ("ring", {"n": 2}),
    ("k_regular_lattice", {"n": 10, "k": 3}),
    ("k_regular_lattice", {"n": 4, "k": 4}),
    ("complete", {"n": 1}),
    ("dodecahedron", {"n": 20}),
])
def test_invalid_sizes(family, kwargs):
    with pytest.raises(ParameterError):
        build_named(family, **kwargs)


def test_tree_is_a_tree():
    for n in range(2, 30):
        g = build_named("tree", n)
        assert g.edge_count == n - 1
        assert is_connected(g)


@pytest.mark.parametrize("family, n", [("complete", 7), ("star", 9), ("ring", 12),
                                       ("line", 5), ("tree", 13), ("cubic", 10)])
def test_spectrum_invariants(family, n):
    g = build_named(family, n)
    sp = spectrum(g)
    u = sp.eigenvectors
    np.testing.assert_allclose(u.T @ u, np.eye(n), atol=1e-12)
    assert sp.eigenvalues[0] == 0.0
    assert np.all(np.diff(sp.eigenvalues) >= -1e-12)
    assert np.all(sp.eigenvalues >= -1e-9)
    assert np.all(u[:, 0] > 0)
    np.testing.assert_allclose(u @ np.diag(sp.eigenvalues) @ u.T, g.laplacian(), atol=1e-10)
    np.testing.assert_array_equal(sp.b_diag, -sp.eigenvalues[1:])
    assert sp.phi.shape == (n, n - 1)


def test_laplacian_rows_and_symmetry():
    g = build_random("erdos_renyi", 40, 3, p=0.2)
    lap = g.laplacian()
    assert np.all(np.abs(lap.sum(axis=1)) <= 1e-12)
    assert np.array_equal(lap, lap.T)
    adj = g.adjacency()
    assert np.array_equal(adj, adj.T) and not adj.diagonal().any()
    np.testing.assert_array_equal(adj.sum(axis=1), g.degrees)


def test_connectivity_examples():
    assert not is_connected(Graph(4, [(0, 1), (2, 3)]))
    assert is_connected(build_named("ring", 5))
    assert is_connected(build_named("star", 9))


def test_disconnected_graph_has_no_spectrum():
    with pytest.raises(ParameterError):
        spectrum(Graph(4, [(0, 1), (2, 3)]))


def test_er_p_one_is_complete():
    g = build_random("erdos_renyi", 10, 7, p=1.0)
    assert g.edges == build_named("complete", 10).edges


def test_er_connected_by_independent_bfs():
    g = build_random("erdos_renyi", 20, 1, p=0.3)
    assert bfs_connected(g.n, g.edges)
    assert spectrum(g).lambda2 > 0


def test_geometric_two_nodes():
    g = build_random("geometric", 2, 0, radius=2.0)
    assert g.edges == ((0, 1),)


def test_random_is_deterministic():
    a = build_random("geometric", 30, 5, radius=0.4)
    b = build_random("geometric", 30, 5, radius=0.4)
    assert a.edges == b.edges


def test_random_gives_up():
    with pytest.raises(GraphGenerationError):
        build_random("erdos_renyi", 50, 0, p=0.001, max_tries=5)


@pytest.mark.parametrize("kwargs", [
    {"model": "erdos_renyi", "n": 5, "seed": 0, "p": 0.0},
    {"model": "erdos_renyi", "n": 1, "seed": 0, "p": 0.5},
    {"model": "geometric", "n": 5, "seed": 0, "radius": -1.0},
    {"model": "small_world", "n": 5, "seed": 0},
])
def test_random_parameter_errors(kwargs):
    with pytest.raises(ParameterError):
        build_random(**kwargs)


def test_graph_validation():
    with pytest.raises(ParameterError):
        Graph(3, [(0, 0)])
    with pytest.raises(ParameterError):
        Graph(3, [(0, 3)])
    assert Graph(3, [(2, 0), (0, 2), (1, 0)]).edges == ((0, 1), (0, 2))


def test_edge_list_round_trip(tmp_path):
    g = build_random("erdos_renyi", 12, 4, p=0.4)
    path = tmp_path / "g.txt"
    write_edge_list(g, path)
    assert path.read_text().splitlines()[0] == "12"
    assert read_edge_list(path).edges == g.edges
    assert parse_edge_list(format_edge_list(g)) == g


def test_edge_list_errors():
    with pytest.raises(ParameterError):
        parse_edge_list("")
    with pytest.raises(ParameterError):
        parse_edge_list("3\n0 x\n")
    with pytest.raises(ParameterError):
        parse_edge_list("4\n0 1\n2 3\n")
    g = parse_edge_list("4\n0 1\n2 3\n", require_connected=False)
    assert component_count(g) == 2


@st.composite
def random_graphs(draw):
    n = draw(st.integers(2, 25))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph(n, [e for e, k in zip(pairs, keep) if k])


@given(random_graphs())
def test_traversal_matches_spectrum(g):
    lam = laplacian_eigenvalues(g)
    assert is_connected(g) == (lam[1] > 1e-9)
    assert np.sum(lam < 1e-9) == component_count(g)
    ncomp, _ = connected_components(g.adjacency(), directed=False)
    assert component_count(g) == ncomp


@given(st.lists(st.tuples(st.integers(1, 6), st.sampled_from(["ring", "complete", "line"])),
                min_size=2, max_size=4))
def test_zero_eigenvalues_count_components(parts):
    edges, offset = [], 0
    for size, fam in parts:
        size = max(size, 3) if fam == "ring" else size
        if size >= 2:
            sub = build_named(fam, size)
            edges += [(i + offset, j + offset) for i, j in sub.edges]
        offset += size
    g = Graph(offset, edges)
    assert np.sum(laplacian_eigenvalues(g) < 1e-9) == len(parts)


@given(st.integers(3, 30), st.randoms(use_true_random=False))
def test_relabel_preserves_spectrum(n, rnd):
    g = build_named("tree", n)
    perm = list(range(n))
    rnd.shuffle(perm)
    h = g.relabel(perm)
    np.testing.assert_allclose(laplacian_eigenvalues(h), laplacian_eigenvalues(g), atol=1e-10)
    assert sorted(h.degrees.tolist()) == sorted(g.degrees.tolist())
