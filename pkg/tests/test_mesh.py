import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trescafem.mesh import (
    DIRICHLET,
    NEUMANN,
    NODE_DIRICHLET,
    NODE_INTERFACE,
    MeshError,
    angle_between,
    build_boundary_topology,
    generate_disk_mesh,
    generate_rectangle_mesh,
    load_mesh,
    polygon_perimeter,
    save_mesh,
    signed_areas,
)


def test_disk_8_tags_two_dirichlet_edges():
    m = generate_disk_mesh(8)
    assert len(m.boundary_edges) == 8
    d = m.boundary_edges[m.edge_tags == DIRICHLET]
    mid = m.vertices[d].mean(axis=1)
    theta = np.sort(np.arctan2(mid[:, 1], mid[:, 0]))
    np.testing.assert_allclose(theta, [np.pi / 8, 3 * np.pi / 8], atol=1e-12)


def test_disk_64_perimeter():
    m = generate_disk_mesh(64)
    per = polygon_perimeter(m)
    assert per == pytest.approx(128 * np.sin(np.pi / 64), rel=1e-12)
    assert abs(per - 2 * np.pi) <= 0.005 * 2 * np.pi


@pytest.mark.parametrize("arc", [None, (1.0, 1.0), (2.0, 1.0)])
def test_disk_rejects_empty_arc(arc):
    with pytest.raises(MeshError):
        generate_disk_mesh(8, arc)


@pytest.mark.parametrize("n", [0, 7, 8.5])
def test_disk_rejects_small_or_fractional_n(n):
    with pytest.raises(MeshError):
        generate_disk_mesh(n)


def test_wrapping_arc_is_taken_modulo_two_pi():
    a = generate_disk_mesh(16, (-np.pi / 4, np.pi / 4))
    b = generate_disk_mesh(16, (7 * np.pi / 4, 9 * np.pi / 4))
    np.testing.assert_array_equal(a.edge_tags, b.edge_tags)
    assert np.count_nonzero(a.edge_tags == DIRICHLET) == 4


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=8, max_value=96))
def test_disk_mesh_properties(n):
    m = generate_disk_mesh(n)
    assert np.all(signed_areas(m.vertices, m.triangles) > 0)
    bv = np.unique(m.boundary_edges)
    np.testing.assert_allclose(np.linalg.norm(m.vertices[bv], axis=1), 1.0, atol=1e-12)
    top = build_boundary_topology(m)
    np.testing.assert_allclose(np.linalg.norm(top.node_normal, axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(top.node_tangent, axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.sum(top.node_normal * top.node_tangent, axis=1), 0.0, atol=1e-14)
    assert top.node_weight.sum() == pytest.approx(polygon_perimeter(m), rel=1e-12)
    # averaged normals stay within one edge angle of the radial direction
    radial = m.vertices[top.boundary_nodes]
    assert np.all(angle_between(top.node_normal, radial) <= 2 * np.pi / n)


@pytest.mark.parametrize("n", [16, 32, 64])
def test_dirichlet_arc_length_under_refinement(n):
    for k in (n, 2 * n):
        m = generate_disk_mesh(k)
        assert abs(polygon_perimeter(m, DIRICHLET) - np.pi / 2) <= m.max_edge_length


def test_interface_nodes_are_dirichlet():
    m = generate_disk_mesh(16)
    top = build_boundary_topology(m)
    iface = top.boundary_nodes[top.node_class == NODE_INTERFACE]
    ang = np.sort(np.mod(np.arctan2(m.vertices[iface, 1], m.vertices[iface, 0]), 2 * np.pi))
    np.testing.assert_allclose(ang, [0.0, np.pi / 2], atol=1e-12)
    assert set(iface) <= set(top.dirichlet_vertices)
    assert not set(iface) & set(top.neumann_nodes)


def test_square_flat_edge_frame():
    m = generate_rectangle_mesh(2, 2, dirichlet_sides=("left",))
    top = build_boundary_topology(m)
    i = int(np.flatnonzero(np.all(np.isclose(m.vertices[top.boundary_nodes], [0.5, 0.0]), axis=1))[0])
    np.testing.assert_allclose(top.node_normal[i], [0.0, -1.0], atol=1e-15)
    np.testing.assert_allclose(top.node_tangent[i], [1.0, 0.0], atol=1e-15)


def test_snapped_normals_are_radial():
    m = generate_disk_mesh(24)
    top = build_boundary_topology(m, snap_to_circle=True)
    p = m.vertices[top.boundary_nodes]
    theta = np.arctan2(p[:, 1], p[:, 0])
    np.testing.assert_allclose(top.node_normal, np.column_stack([np.cos(theta), np.sin(theta)]), atol=1e-14)


def test_neumann_weights_on_square():
    m = generate_rectangle_mesh(4, 2, width=2.0, height=1.0, dirichlet_sides=("left",))
    top = build_boundary_topology(m)
    assert top.node_weight.sum() == pytest.approx(6.0, rel=1e-12)
    assert top.node_class[top.boundary_nodes.tolist().index(0)] in (NODE_DIRICHLET, NODE_INTERFACE)


def test_round_trip(tmp_path):
    m = generate_disk_mesh(40, (0.3, 2.0))
    p = tmp_path / "d.tmesh"
    save_mesh(m, p)
    assert load_mesh(p).same_as(m)


def _write(tmp_path, body):
    p = tmp_path / "m.tmesh"
    p.write_text(body)
    return p


GOOD = """TMESH 1
VERTICES 3
0 0
1 0
0 1
TRIANGLES 1
0 1 2
BOUNDARY_EDGES 3
0 1 D
1 2 N
2 0 N
"""


def test_load_small_file(tmp_path):
    m = load_mesh(_write(tmp_path, GOOD))
    assert m.n_vertices == 3
    assert list(m.edge_tags) == [DIRICHLET, NEUMANN, NEUMANN]


@pytest.mark.parametrize(
    "body",
    [
        GOOD.replace("0 1 2", "0 1 5"),
        GOOD.replace("1 2 N", "1 2 X"),
        GOOD.replace("TMESH 1", "TMESH 2"),
        GOOD.replace("VERTICES 3", "VERTICES 4"),
        GOOD.replace("0 1 2", "0 2 1"),
        GOOD.replace("2 0 N\n", ""),
        GOOD.replace("1 0\n", "1 zero\n"),
        GOOD + "extra\n",
    ],
    ids=["index", "tag", "version", "count", "orientation", "open-loop", "number", "trailing"],
)
def test_load_rejects_malformed(tmp_path, body):
    with pytest.raises(MeshError):
        load_mesh(_write(tmp_path, body))
