"""Triangulation and mesh-size measures on flat node sets."""
import math

import numpy as np
import pytest

from nfrbf.errors import GeometryError
from nfrbf.geometry import (
    NodeSet,
    circumradii,
    covering_radius,
    delaunay,
    gen_nodes_square,
    triangle_areas,
)


def test_four_corners_two_triangles():
    ns = NodeSet(points=np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    mesh = delaunay(ns)
    assert mesh.triangles.shape == (2, 3)
    assert abs(np.sum(triangle_areas(mesh.nodes.points, mesh.triangles)) - 1.0) < 1e-14


def test_three_nodes_single_triangle():
    ns = NodeSet(points=np.array([[0.0, 0.0], [1.0, 0.0], [0.3, 0.9]]))
    mesh = delaunay(ns)
    assert mesh.triangles.shape == (1, 3)


def test_collinear_nodes_rejected():
    ns = NodeSet(points=np.array([[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]]))
    with pytest.raises(GeometryError):
        delaunay(ns)


def test_total_area_covers_square(square_mesh_2000):
    areas = triangle_areas(square_mesh_2000.nodes.points, square_mesh_2000.triangles)
    assert np.all(areas > 0)
    assert abs(np.sum(areas) - 1.0) < 1e-10


def test_every_node_used(square_mesh_2000):
    used = np.unique(square_mesh_2000.triangles)
    assert len(used) == len(square_mesh_2000.nodes)


def test_delaunay_empty_circumcircle(square_mesh_2000):
    """Brute-force in-circle check on every triangle."""
    pts = square_mesh_2000.nodes.points
    tris = square_mesh_2000.triangles
    from nfrbf.geometry import circumcenters

    centers, radii = circumcenters(pts, tris)
    from scipy.spatial import cKDTree

    tree = cKDTree(pts)
    for c, r, tri in zip(centers, radii, tris):
        inside = tree.query_ball_point(c, r * (1.0 - 1e-12))
        assert set(inside) <= set(tri.tolist())


def test_circumradius_right_triangle():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    mesh = delaunay(NodeSet(points=pts))
    r = circumradii(mesh.nodes.points, mesh.triangles)
    assert np.allclose(r, math.sqrt(2) / 2, atol=1e-14)


def test_covering_radius_equilateral_lattice():
    ns = gen_nodes_square("regular", 2000)
    mesh = delaunay(ns)
    pts = mesh.nodes.points
    inner = (pts[:, 0] > 0.2) & (pts[:, 0] < 0.8) & (pts[:, 1] > 0.2) & (pts[:, 1] < 0.8)
    keep = np.all(inner[mesh.triangles], axis=1)
    r = circumradii(pts, mesh.triangles[keep])
    from scipy.spatial import cKDTree

    d, _ = cKDTree(pts).query(pts[inner], k=2)
    s = np.median(d[:, 1])
    assert np.allclose(np.max(r), s / math.sqrt(3), rtol=1e-6)


def test_covering_radius_matches_dense_sampling(square_mesh_2000):
    """Independent estimate: max over 4*10^6 domain samples (grid plus
    jitter so the worst empty ball cannot slip between samples) of the
    distance to the nearest node."""
    h = covering_radius(square_mesh_2000.nodes.points, square_mesh_2000.triangles)
    rng = np.random.default_rng(0)
    m = 2000
    g = (np.arange(m) + 0.5) / m
    gx, gy = np.meshgrid(g, g)
    samples = np.column_stack([gx.ravel(), gy.ravel()])
    samples += rng.uniform(-0.5 / m, 0.5 / m, samples.shape)
    np.clip(samples, 0.0, 1.0, out=samples)
    from scipy.spatial import cKDTree

    d, _ = cKDTree(square_mesh_2000.nodes.points).query(samples)
    assert abs(np.max(d) - h) <= 0.02 * h
