from fractions import Fraction as F

import networkx as nx
import pytest

from gasketcalc.errors import ConfigurationError, DomainError
from gasketcalc.fractal import (
    VertexAddress,
    apply_symmetry,
    boundary_distances,
    builtin,
    canonical_vertex,
    cells_containing,
    laplacian_domain,
    level_graph,
    m_distance,
    neighborhood,
    parse_descriptor,
    parse_vertex,
    symmetry_group,
    vertex_order,
)

V1_SIZES = {"sg": 6, "sg3": 10, "hg": 12, "sg4": 10}
INTERIOR_V1 = {"sg": 3, "sg3": 7, "hg": 9, "sg4": 6}


def test_builtin_constants(fractals):
    sg = fractals["sg"]
    assert (sg.r, sg.mu, sg.rho, sg.lam) == (F(3, 5), F(1, 3), F(1, 5), F(1, 5))
    sg3 = fractals["sg3"]
    assert (sg3.r, sg3.lam, sg3.mu, sg3.rho) == (F(7, 15), F(1, 15), F(1, 6), F(7, 90))
    hg = fractals["hg"]
    assert (hg.r, hg.lam, hg.mu, hg.rho) == (F(3, 7), F(1, 7), F(1, 6), F(1, 14))
    sg4 = fractals["sg4"]
    assert (sg4.r, sg4.lam, sg4.rho, sg4.mu) == (F(2, 3), F(1, 6), F(1, 6), F(1, 4))


def test_v1_sizes(fractals):
    for name, frac in fractals.items():
        g = level_graph(frac, 1)
        assert len(g.vertices) == V1_SIZES[name]
        interior = [v for v in g.vertices if not v.is_boundary]
        assert len(interior) == INTERIOR_V1[name]


def test_sg_vertex_count_formula(fractals):
    for m in range(6):
        g = level_graph(fractals["sg"], m)
        assert len(g.vertices) == (3 ** (m + 1) + 3) // 2


def test_canonicalization(fractals):
    sg = fractals["sg"]
    assert canonical_vertex(sg, (0,), 1) == canonical_vertex(sg, (1,), 0)
    q2 = canonical_vertex(sg, (), 2)
    assert q2.is_boundary and q2.corner == 2
    # level-1 rule applied inside a cell
    assert canonical_vertex(sg, (0, 1), 2) == canonical_vertex(sg, (0, 2), 1)
    # canonicalization is idempotent and strips fixed-point tails
    a = canonical_vertex(sg, (0, 1, 1, 1), 1)
    assert a == canonical_vertex(sg, a.word, a.corner) == canonical_vertex(sg, (0,), 1)


def test_vertex_order_and_cells(fractals):
    sg3 = fractals["sg3"]
    center = canonical_vertex(sg3, (3,), 0)
    assert vertex_order(sg3, center) == 3
    assert len(cells_containing(sg3, center, 2)) == 3
    hg = fractals["hg"]
    nonjunction = canonical_vertex(hg, (4,), 0)
    assert vertex_order(hg, nonjunction) == 1


def test_sg_level1_graph_shape(fractals):
    g = level_graph(fractals["sg"], 1)
    edges = sum(len(nb) for nb in g.adjacency) // 2
    assert (len(g.vertices), edges) == (6, 9)


def test_m_distance_examples(fractals):
    sg = fractals["sg"]
    g1 = level_graph(sg, 1)
    q0, q1 = VertexAddress((), 0), VertexAddress((), 1)
    assert m_distance(g1, q0, q1) == 2
    assert m_distance(g1, q0, q0) == 0
    g2 = level_graph(sg, 2)
    assert m_distance(g2, q0, canonical_vertex(sg, (1, 1), 0)) == 3


def test_m_distance_against_networkx(fractals):
    g = level_graph(fractals["sg3"], 2)
    nxg = nx.Graph()
    for i, nbrs in enumerate(g.adjacency):
        for j in nbrs:
            nxg.add_edge(i, j)
    lengths = dict(nx.shortest_path_length(nxg, source=0))
    for j in range(len(g.vertices)):
        assert m_distance(g, g.vertices[0], g.vertices[j]) == lengths[j]


def test_laplacian_domain(fractals):
    sg = fractals["sg"]
    g2 = level_graph(sg, 2)
    assert len(laplacian_domain(g2, 1)) == 12
    assert len(laplacian_domain(g2, 2)) == 6
    assert laplacian_domain(g2, 9) == ()
    # monotone decreasing in n
    sizes = [len(laplacian_domain(g2, n)) for n in range(1, 6)]
    assert sizes == sorted(sizes, reverse=True)
    # domain = interior for n = 1
    assert set(laplacian_domain(g2, 1)) == {
        i for i, v in enumerate(g2.vertices) if not v.is_boundary}


def test_neighborhood_n1(fractals):
    sg = fractals["sg"]
    g1 = level_graph(sg, 1)
    x = canonical_vertex(sg, (0,), 1)
    hood = neighborhood(g1, x, 1)
    assert len(hood.cells) == 2
    assert len(hood.boundary) == 4
    assert set(hood.boundary) == set(g1.adjacency[g1.index[x]])


def test_neighborhood_n2_nonboundary_points(fractals):
    sg = fractals["sg"]
    g2 = level_graph(sg, 2)
    found = False
    for i in laplacian_domain(g2, 2):
        hood = neighborhood(g2, g2.vertices[i], 2)
        ring2 = set(hood.rings[2])
        not_boundary = ring2 - set(hood.boundary)
        if not_boundary:
            found = True
    assert found, "expected some second-ring vertices to be interior"


def test_neighborhood_domain_error(fractals):
    sg = fractals["sg"]
    g1 = level_graph(sg, 1)
    with pytest.raises(DomainError):
        neighborhood(g1, canonical_vertex(sg, (0,), 1), 2)


def test_symmetry_action(fractals):
    for frac in fractals.values():
        group = symmetry_group(frac)
        g1 = level_graph(frac, 1)
        edge_set = {
            frozenset((g1.vertices[i], g1.vertices[j]))
            for i, nbrs in enumerate(g1.adjacency) for j in nbrs}
        for g in group.elements:
            mapped = {
                frozenset((apply_symmetry(frac, g, a), apply_symmetry(frac, g, b)))
                for a, b in edge_set}
            assert mapped == edge_set


def test_sg_rotation_composition(fractals):
    sg = fractals["sg"]
    rot = (1, 2, 0)
    x = canonical_vertex(sg, (0, 1), 2)
    y = x
    for _ in range(3):
        y = apply_symmetry(sg, rot, y)
    assert y == x
    assert apply_symmetry(sg, rot, VertexAddress((), 0)) == VertexAddress((), 1)


def test_finite_types_of_u2_on_sg(fractals):
    """U_m^2(x) over m <= 4 on sg falls into exactly four marked-isomorphism types."""
    sg = fractals["sg"]
    seen = []
    for m in (2, 3, 4):
        g = level_graph(sg, m)
        for i in laplacian_domain(g, 2):
            hood = neighborhood(g, g.vertices[i], 2)
            cells = set(hood.cells)
            nxg = nx.Graph()
            members = {
                v for ci in cells for v in g.cell_vertices[ci]}
            for v in members:
                role = ("center" if v == hood.center
                        else "boundary" if v in hood.boundary else "inner")
                nxg.add_node(v, role=role)
            for ci in cells:
                corners = g.cell_vertices[ci]
                for a in range(len(corners)):
                    for b in range(a + 1, len(corners)):
                        nxg.add_edge(corners[a], corners[b])
            if not any(
                    nx.is_isomorphic(nxg, old,
                                     node_match=lambda u, v: u["role"] == v["role"])
                    for old in seen):
                seen.append(nxg)
    assert len(seen) == 4


def test_parse_vertex(fractals):
    sg = fractals["sg"]
    assert parse_vertex(sg, "01/2") == canonical_vertex(sg, (0, 1), 2)
    assert parse_vertex(sg, "/2") == VertexAddress((), 2)
    with pytest.raises(ConfigurationError):
        parse_vertex(sg, "abc")


def test_descriptor_validation_rejects_bad_tables(fractals):
    text = """
name: broken
maps: 3
boundary: 3
r: 3/5
mu: 1/3
lambda: 1/5
identify: 0/1 = 1/0
identify: 0/2 = 2/0
generator: corners=1 0 2; maps=1 0 2; push=self
"""
    # missing one gluing: level-1 graph disconnected
    with pytest.raises(ConfigurationError):
        parse_descriptor(text)


def test_tent_integral_values(fractals):
    sg = fractals["sg"]
    g1 = level_graph(sg, 1)
    x = g1.index[canonical_vertex(sg, (0,), 1)]
    assert g1.tent_integral(x) == F(2, 9)
    # cell count stays the order of the vertex at deeper levels
    g3 = level_graph(sg, 3)
    assert g3.cell_count_at(g3.index[canonical_vertex(sg, (0,), 1)]) == 2
