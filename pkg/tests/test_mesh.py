import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from egstokes.mesh import (DIRICHLET, INTERIOR, NEUMANN, BoundarySpec, Mesh, MeshError,
                           barycentric, build_facets, generate_unit_square, import_mesh,
                           read_mesh_file, write_mesh_file)

from conftest import obstacle, square

REF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@pytest.mark.parametrize("L", [1, 2, 3, 4])
def test_unit_square_counts(L):
    m = square(L)
    n = 2 ** L
    assert m.n_vertices == (n + 1) ** 2
    assert m.n_cells == 2 * n * n
    assert m.n_facets == 2 * n * (n + 1) + n * n
    assert m.h == pytest.approx(np.sqrt(2) * 2.0 ** -L)  # diagonal


def test_level2_census():
    m = square(2)
    assert (m.n_vertices, m.n_cells, m.n_facets) == (25, 32, 56)
    assert m.euler_characteristic() == 1
    assert np.sum(m.facet_markers == INTERIOR) == 40
    assert np.sum(m.facet_markers != INTERIOR) == 16
    assert 2 * m.n_vertices + m.n_cells == 82


def test_level3_census_brute_force():
    m = square(3)
    n = 8
    # enumerate grid edges directly: horizontals, verticals, diagonals
    brute = 2 * n * (n + 1) + n * n
    assert (m.n_vertices, m.n_cells, m.n_facets) == (81, 128, brute)
    assert brute == 208


def test_uniform_areas():
    m = square(4)
    assert m.cell_areas.max() / m.cell_areas.min() == 1.0
    assert np.allclose(m.cell_areas, 1.0 / (2 * 16 ** 2), rtol=0, atol=1e-16)


def test_normals_point_from_plus_to_minus():
    m = square(3)
    inner = m.facet_minus >= 0
    d = m.cell_centroids[m.facet_minus[inner]] - m.cell_centroids[m.facet_plus[inner]]
    assert np.all(np.einsum("fd,fd->f", m.facet_normals[inner], d) > 0)
    assert np.all(m.facet_plus[inner] < m.facet_minus[inner])


def test_boundary_normals_outward():
    m = square(2)
    mids = m.facet_midpoints
    bottom = (m.facet_minus < 0) & (np.abs(mids[:, 1]) < 1e-12)
    assert bottom.sum() == 4
    assert np.allclose(m.facet_normals[bottom], [0.0, -1.0])
    out = (mids - 0.5)[m.facet_minus < 0]
    assert np.all(np.einsum("fd,fd->f", m.facet_normals[m.facet_minus < 0], out) > 0)


def test_closed_boundary_sum():
    m = square(3)
    bnd = m.facet_minus < 0
    s = (m.facet_lengths[bnd, None] * m.facet_normals[bnd]).sum(axis=0)
    assert np.all(np.abs(s) < 1e-12)


def test_h_e_equals_length():
    m = square(2)
    assert np.array_equal(m.facet_h, m.facet_lengths)
    f = m.facet(0)
    assert f.h_e == f.length


def test_two_triangle_convention():
    # two triangles sharing the diagonal (0,0)-(1,1)
    v = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    c = np.array([[0, 1, 2], [0, 2, 3]])
    facets = build_facets(v, c, BoundarySpec.all_dirichlet())
    assert len(facets) == 5
    diag = [f for f in facets if f.marker == INTERIOR]
    assert len(diag) == 1
    f = diag[0]
    assert (f.plus_cell, f.minus_cell) == (0, 1)
    # cell 0 lies below the diagonal, cell 1 above
    assert np.allclose(f.normal, np.array([-1.0, 1.0]) / np.sqrt(2))
    assert f.marker_name == "Interior"


def test_non_manifold_rejected():
    v = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [1.5, 0.5]])
    c = np.array([[0, 1, 2], [1, 0, 3], [0, 1, 4]])
    with pytest.raises(MeshError, match="non-manifold|counter-clockwise"):
        Mesh(v, c, BoundarySpec.all_dirichlet())


def test_non_manifold_import(tmp_path):
    p = tmp_path / "bad.msh"
    p.write_text("vertices 5\n0 0\n1 0\n0.5 1\n0.5 -1\n0.5 0.5\n"
                 "cells 3\n0 1 2\n1 0 3\n0 1 4\n")
    with pytest.raises(MeshError, match="non-manifold"):
        import_mesh(p)


def test_clockwise_cells_rejected_by_constructor():
    with pytest.raises(MeshError):
        Mesh(REF, np.array([[0, 2, 1]]), BoundarySpec.all_neumann())


def test_import_two_triangles(tmp_path):
    p = tmp_path / "sq.msh"
    p.write_text("# unit square\nvertices 4\n0 0\n1 0\n1 1\n0 1\n"
                 "cells 2\n0 2 1   # clockwise on purpose\n0 2 3\n")
    m = import_mesh(p)
    assert (m.n_vertices, m.n_cells, m.n_facets) == (4, 2, 5)
    assert np.sum(m.facet_markers == INTERIOR) == 1
    assert np.all(m.cell_areas > 0)


def test_import_markers_and_area(tmp_path):
    p = tmp_path / "sq.msh"
    p.write_text("vertices 4\n0 0\n1 0\n1 1\n0 1\ncells 2\n0 1 2\n0 2 3\n"
                 "boundary_markers 2\n0 1 N\n3 2 N\narea 1.0\n")
    m = import_mesh(p, BoundarySpec.all_dirichlet())
    assert np.sum(m.facet_markers == NEUMANN) == 2
    assert np.sum(m.facet_markers == DIRICHLET) == 2
    assert m.has_neumann and m.has_dirichlet


def test_import_errors(tmp_path):
    cases = {
        "header": "vertex 3\n0 0\n1 0\n0 1\ncells 1\n0 1 2\n",
        "fields": "vertices 3\n0 0\n1 0 4\n0 1\ncells 1\n0 1 2\n",
        "range": "vertices 3\n0 0\n1 0\n0 1\ncells 1\n0 1 5\n",
        "marker": "vertices 3\n0 0\n1 0\n0 1\ncells 1\n0 1 2\nboundary_markers 1\n0 1 X\n",
        "interior": "vertices 4\n0 0\n1 0\n1 1\n0 1\ncells 2\n0 1 2\n0 2 3\nboundary_markers 1\n0 2 N\n",
        "area": "vertices 3\n0 0\n1 0\n0 1\ncells 1\n0 1 2\narea 0.75\n",
        "degenerate": "vertices 3\n0 0\n1 0\n2 0\ncells 1\n0 1 2\n",
        "eof": "vertices 3\n0 0\n1 0\n",
        "section": "vertices 3\n0 0\n1 0\n0 1\ncells 1\n0 1 2\nfoo 2\n",
    }
    for name, text in cases.items():
        p = tmp_path / f"{name}.msh"
        p.write_text(text)
        with pytest.raises(MeshError):
            import_mesh(p)


def test_write_read_roundtrip(tmp_path):
    m = generate_unit_square(2, BoundarySpec.dirichlet_on_x(0.0, 1.0))
    p = tmp_path / "m.msh"
    write_mesh_file(p, m, area=1.0, markers=True)
    v, c, overrides, area = read_mesh_file(p)
    assert np.array_equal(v, m.vertices) and np.array_equal(c, m.cells)
    assert area == 1.0
    m2 = import_mesh(p, BoundarySpec.all_dirichlet())
    assert np.array_equal(m2.facet_markers, m.facet_markers)


def test_bad_classifier():
    with pytest.raises(MeshError):
        generate_unit_square(1, BoundarySpec(lambda m: np.zeros(len(m))))


def test_level_must_be_positive():
    with pytest.raises(ValueError):
        generate_unit_square(0)


def test_locate_and_barycentric():
    m = square(3)
    pts = np.random.default_rng(3).random((50, 2))
    cells = m.locate(pts)
    assert np.all(cells >= 0)
    lam = barycentric(m.vertices[m.cells[cells]], pts)
    assert np.all(lam >= -1e-12)
    assert np.allclose(lam.sum(axis=1), 1.0)
    assert m.locate(np.array([[2.0, 2.0]]))[0] == -1


def test_arrays_read_only():
    m = square(1)
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 3.0


def test_obstacle_fixture():
    m = obstacle()
    assert m.n_vertices == 6531 and m.n_cells == 12718
    assert 2 * m.n_vertices + m.n_cells == 25780
    assert m.euler_characteristic() == 0  # one hole
    loops = m.boundary_loops()
    assert len(loops) == 2
    for loop in loops:
        s = (m.facet_lengths[loop, None] * m.facet_normals[loop]).sum(axis=0)
        assert np.all(np.abs(s) < 1e-10)
    assert np.all(m.facet_markers[m.facet_minus < 0] == DIRICHLET)
    inner = m.facet_minus >= 0
    d = m.cell_centroids[m.facet_minus[inner]] - m.cell_centroids[m.facet_plus[inner]]
    assert np.all(np.einsum("fd,fd->f", m.facet_normals[inner], d) > 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_locate_property(L, x, y):
    m = square(L)
    c = m.locate(np.array([[x, y]]))[0]
    lam = barycentric(m.vertices[m.cells[c]], np.array([x, y]))
    assert c >= 0 and lam.min() >= -1e-12


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=3, max_size=3, unique=True))
def test_barycentric_reproduces_point(pts):
    tri = np.array(pts)
    a, b = tri[1] - tri[0], tri[2] - tri[0]
    area = a[0] * b[1] - a[1] * b[0]
    if abs(area) < 1e-3:
        return
    x = tri.mean(axis=0) + 0.1 * (tri[1] - tri[0])
    lam = barycentric(tri, x)
    assert np.allclose(lam @ tri, x, atol=1e-9)
    assert lam.sum() == pytest.approx(1.0)
