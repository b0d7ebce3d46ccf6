"""Mesh construction, quadrature rules, and basis tables."""

from math import factorial

import numpy as np
import pytest

from genstokes.errors import InvalidDimensions
from genstokes.fem import (
    LOCAL_EDGES,
    TaylorHoodSpace,
    build_mesh,
    p1_basis,
    p2_basis,
    quad_tet,
)


def test_single_cell_counts():
    mesh = build_mesh(1, 1, 1, 1.0, 1.0, 1.0)
    assert mesh.n_tets == 6
    assert mesh.n_vertices == 8
    assert mesh.volumes().sum() == pytest.approx(1.0, rel=1e-12)


def test_two_cell_counts():
    mesh = build_mesh(2, 2, 2, 1.0, 1.0, 1.0)
    assert mesh.n_tets == 6 * 8
    assert mesh.n_vertices == 27
    assert mesh.volumes().sum() == pytest.approx(1.0, rel=1e-12)


def test_anisotropic_box_volume():
    mesh = build_mesh(2, 3, 1, 2.0, 0.5, 3.0)
    assert mesh.volumes().sum() == pytest.approx(3.0, rel=1e-12)


def test_face_conformity():
    mesh = build_mesh(3, 2, 2, 1.0, 1.0, 1.0)
    interior, boundary, max_share = mesh.face_counts()
    assert max_share == 2
    # boundary faces: two triangles per cell face on the box surface
    expected_boundary = 2 * 2 * (3 * 2 + 3 * 2 + 2 * 2)
    assert boundary == expected_boundary


def test_invalid_dimensions():
    with pytest.raises(InvalidDimensions):
        build_mesh(0, 1, 1, 1.0, 1.0, 1.0)
    with pytest.raises(InvalidDimensions):
        build_mesh(1, 1, 1, 0.0, 1.0, 1.0)


def test_mesh_determinism():
    a = build_mesh(2, 2, 2, 1.0, 1.0, 1.0)
    b = build_mesh(2, 2, 2, 1.0, 1.0, 1.0)
    assert np.array_equal(a.tets, b.tets)
    assert np.array_equal(a.edges, b.edges)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_quadrature_monomial_exactness(n):
    pts, wts = quad_tet(n)
    assert wts.sum() == pytest.approx(1.0 / 6.0, rel=1e-14)
    assert np.all(wts > 0)
    degree = 2 * n - 1
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            for c in range(degree + 1 - a - b):
                val = np.sum(wts * pts[:, 0] ** a * pts[:, 1] ** b * pts[:, 2] ** c)
                exact = (
                    factorial(a) * factorial(b) * factorial(c)
                    / factorial(a + b + c + 3)
                )
                assert val == pytest.approx(exact, abs=1e-15, rel=1e-13)


def test_p2_basis_nodal_property():
    # value 1 at own node, 0 at the other nodes
    ref_nodes = np.array([
        [0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1],
    ], dtype=float)
    mids = np.array([
        0.5 * (ref_nodes[a] + ref_nodes[b]) for a, b in LOCAL_EDGES
    ])
    nodes = np.vstack([ref_nodes, mids])
    vals, _ = p2_basis(nodes)
    assert np.allclose(vals, np.eye(10), atol=1e-14)


def test_p2_partition_of_unity():
    rng = np.random.default_rng(0)
    pts = rng.dirichlet(np.ones(4), size=20)[:, 1:]  # interior barycentric
    vals, grads = p2_basis(pts)
    assert np.allclose(vals.sum(axis=1), 1.0, atol=1e-13)
    assert np.allclose(grads.sum(axis=1), 0.0, atol=1e-13)


def test_p1_partition_of_unity():
    rng = np.random.default_rng(1)
    pts = rng.dirichlet(np.ones(4), size=20)[:, 1:]
    vals = p1_basis(pts)
    assert np.allclose(vals.sum(axis=1), 1.0, atol=1e-14)


def test_taylor_hood_dof_counts():
    mesh = build_mesh(2, 2, 2, 1.0, 1.0, 1.0)
    space = TaylorHoodSpace(mesh)
    assert space.n_velocity == 3 * (mesh.n_vertices + mesh.n_edges)
    assert space.n_pressure == mesh.n_vertices


def test_dirichlet_mask_geometry():
    mesh = build_mesh(1, 1, 1, 1.0, 1.0, 1.0)
    space = TaylorHoodSpace(mesh)
    # all 8 vertices on the walls; the body-diagonal midpoint is interior
    center = np.array([0.5, 0.5, 0.5])
    dist = np.linalg.norm(space.scalar_nodes - center, axis=1)
    inside = dist < 1e-12
    assert inside.sum() == 1
    assert not space.dirichlet_scalar[np.argmin(dist)]
    assert space.dirichlet_scalar.sum() == space.n_scalar - 1
    assert space.interior_idx.size == 3


def test_dirichlet_mask_larger_mesh():
    mesh = build_mesh(3, 3, 3, 2.0, 1.0, 1.0)
    space = TaylorHoodSpace(mesh)
    pts = space.scalar_nodes
    on_wall = np.zeros(len(pts), dtype=bool)
    for axis, length in enumerate((2.0, 1.0, 1.0)):
        on_wall |= np.isclose(pts[:, axis], 0.0) | np.isclose(pts[:, axis], length)
    assert np.array_equal(space.dirichlet_scalar, on_wall)
