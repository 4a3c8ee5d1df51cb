import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermovi.errors import DegenerateElement, InvalidArgument
from thermovi.mesh import (
    MECH_DIRICHLET,
    THERMAL_DIRICHLET,
    Mesh,
    element_geometry,
    generate_box_tet_mesh,
    generate_rectangle_tri_mesh,
    generate_segment_mesh,
    lumped_weights,
    read_mesh,
    ring,
    write_mesh,
)


def test_segment_mesh_spacing():
    m = generate_segment_mesh(100, 10)
    assert m.n_nodes == 11 and m.n_elements == 10
    np.testing.assert_allclose(np.diff(m.coords[:, 0]), 10.0)
    assert m.facet_labels == (frozenset(), frozenset())


def test_unit_segment():
    m = generate_segment_mesh(1, 1)
    np.testing.assert_array_equal(m.coords[:, 0], [0.0, 1.0])
    assert m.volumes[0] == 1.0


def test_segment_weights_by_hand():
    w = lumped_weights(generate_segment_mesh(2, 4)).node
    np.testing.assert_allclose(w, [0.25, 0.5, 0.5, 0.5, 0.25], rtol=0, atol=1e-15)


@pytest.mark.parametrize("length,n", [(0, 3), (-1, 3), (1, 0), (1, 2.5)])
def test_segment_rejects(length, n):
    with pytest.raises(InvalidArgument):
        generate_segment_mesh(length, n)


def test_unit_cube_six_tets():
    m = generate_box_tet_mesh((1, 1, 1), (1, 1, 1))
    assert m.n_elements == 6
    assert m.total_volume == pytest.approx(1.0, rel=1e-14)
    assert np.all(m.volumes > 0)


def test_beam_box_counts():
    m = generate_box_tet_mesh((10, 2, 2), (10, 2, 2))
    assert m.n_elements == 240
    assert m.n_nodes == 11 * 3 * 3
    assert m.total_volume == pytest.approx(40.0, rel=1e-13)
    assert np.all(m.volumes > 0)


def test_box_rejects_zero_division():
    with pytest.raises(InvalidArgument):
        generate_box_tet_mesh((1, 1, 1), (1, 0, 1))


def test_box_is_reproducible():
    a = generate_box_tet_mesh((3, 2, 1), (3, 2, 2), (0, -1, -1))
    b = generate_box_tet_mesh((3, 2, 1), (3, 2, 2), (0, -1, -1))
    assert a.coords.tobytes() == b.coords.tobytes()
    assert a.elements.tobytes() == b.elements.tobytes()


def test_ring_1d():
    m = generate_segment_mesh(5, 5)
    assert ring(m, 2) == [1, 2]
    assert ring(m, 0) == [0]
    assert ring(m, 5) == [4]
    with pytest.raises(InvalidArgument):
        ring(m, 6)


@pytest.mark.parametrize(
    "mesh",
    [
        generate_box_tet_mesh((1, 1, 1), (1, 1, 1)),
        generate_box_tet_mesh((2, 1, 1), (3, 2, 2)),
        generate_rectangle_tri_mesh((2, 1), (4, 3)),
    ],
)
def test_ring_matches_brute_force(mesh):
    for a in range(mesh.n_nodes):
        brute = [k for k in range(mesh.n_elements) if a in mesh.elements[k]]
        assert mesh.ring(a) == brute


def test_element_geometry_unit_simplices():
    g = element_geometry(generate_segment_mesh(1, 1), 0)
    assert g.volume == 1.0
    np.testing.assert_allclose(g.gradients[:, 0], [-1.0, 1.0])

    tri = Mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
    g = element_geometry(tri, 0)
    assert g.volume == pytest.approx(0.5)
    np.testing.assert_allclose(g.gradients[0], [-1.0, -1.0])

    tet = Mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], [[0, 1, 2, 3]])
    g = element_geometry(tet, 0)
    assert g.volume == pytest.approx(1 / 6)
    np.testing.assert_allclose(lumped_weights(tet).pair, 1 / 24)


def test_orientation_repaired():
    tet = Mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], [[0, 2, 1, 3]])
    assert tet.volumes[0] > 0
    tri = Mesh([[0, 0], [1, 0], [0, 1]], [[0, 2, 1]])
    assert tri.volumes[0] == pytest.approx(0.5)


def test_degenerate_element():
    with pytest.raises(DegenerateElement):
        Mesh([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]])


def test_invalid_tables():
    with pytest.raises(InvalidArgument):
        Mesh([[0.0], [1.0]], [[0, 0]])
    with pytest.raises(InvalidArgument):
        Mesh([[0.0], [1.0], [5.0]], [[0, 1]])  # node 2 unused
    with pytest.raises(InvalidArgument):
        Mesh([[0.0], [1.0]], [[0, 2]])
    with pytest.raises(InvalidArgument):
        # interior point is not a boundary facet
        Mesh([[0.0], [1.0], [2.0]], [[0, 1], [1, 2]], facets=[[1]])


@pytest.mark.parametrize(
    "mesh",
    [
        generate_segment_mesh(3, 7),
        generate_rectangle_tri_mesh((2, 3), (3, 4)),
        generate_box_tet_mesh((10, 2, 2), (10, 2, 2), (0, -1, -1)),
    ],
)
def test_geometric_invariants(mesh):
    lw = lumped_weights(mesh)
    assert lw.node.sum() == pytest.approx(mesh.total_volume, rel=1e-12)
    np.testing.assert_allclose(lw.pair, mesh.volumes[:, None] / (mesh.dim + 1) * np.ones(mesh.dim + 1))
    h = mesh.inscribed_diameters.min()
    assert np.abs(mesh.shape_gradients.sum(axis=1)).max() < 1e-12 / h
    # barycentric Kronecker relation: gradN_a . (X_b - X_0) = delta_ab - delta_a0
    x = mesh.coords[mesh.elements]
    rel = np.einsum("eai,ebi->eab", mesh.shape_gradients, x - x[:, :1])
    d1 = mesh.dim + 1
    expect = np.eye(d1) - np.eye(d1)[:, :1]
    np.testing.assert_allclose(rel, np.broadcast_to(expect, rel.shape), atol=1e-12)


def test_every_facet_has_one_owner():
    m = generate_box_tet_mesh((1, 1, 1), (2, 2, 2))
    for f, k in zip(m.facets, m.facet_owner):
        assert set(f) <= set(m.elements[k])
        owners = [e for e in range(m.n_elements) if set(f) <= set(m.elements[e])]
        assert owners == [k]
    # boundary area of the unit cube
    assert m.facet_areas.sum() == pytest.approx(6.0)


def test_labels_are_independent():
    m = generate_segment_mesh(1, 2)
    m = m.with_labels(MECH_DIRICHLET, lambda x: x[:, 0] == 0)
    m = m.with_labels(THERMAL_DIRICHLET)
    np.testing.assert_array_equal(m.nodes_with_label(MECH_DIRICHLET), [0])
    np.testing.assert_array_equal(m.nodes_with_label(THERMAL_DIRICHLET), [0, 2])
    with pytest.raises(InvalidArgument):
        m.with_labels("wall")


def test_mesh_arrays_are_read_only():
    m = generate_segment_mesh(1, 2)
    with pytest.raises(ValueError):
        m.coords[0, 0] = 3.0


@settings(max_examples=25, deadline=None)
@given(
    st.tuples(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3)),
    st.tuples(*[st.floats(0.1, 10.0)] * 3),
)
def test_box_volume_partition(div, lengths):
    m = generate_box_tet_mesh(lengths, div)
    assert m.n_elements == 6 * np.prod(div)
    assert np.all(m.volumes > 0)
    assert lumped_weights(m).node.sum() == pytest.approx(np.prod(lengths), rel=1e-12)


def test_text_round_trip(tmp_path):
    m = generate_box_tet_mesh((2, 1, 1), (2, 1, 1)).with_labels(MECH_DIRICHLET, lambda x: x[:, 0] == 0)
    m = m.with_labels(THERMAL_DIRICHLET, lambda x: x[:, 0] == 0)
    path = tmp_path / "box.mesh"
    write_mesh(m, path)
    back = read_mesh(path)
    assert back.coords.tobytes() == m.coords.tobytes()
    np.testing.assert_array_equal(back.elements, m.elements)
    np.testing.assert_array_equal(back.facets, m.facets)
    assert back.facet_labels == m.facet_labels


def test_read_rejects_garbage(tmp_path):
    p = tmp_path / "bad.mesh"
    p.write_text("1 2 1 0\n0.0\n1.0\n0 1\nextra\n")
    with pytest.raises(InvalidArgument):
        read_mesh(p)
