"""Closed surfaces: torus, sphere refinements, cyclide, implicit deformations."""
import math

import numpy as np
import pytest

from nfrbf.errors import GeometryError
from nfrbf.geometry import (
    BumpySphereSpec,
    CyclideSpec,
    DeformedSphereSpec,
    SurfaceMesh,
    TORUS_R,
    TORUS_r,
    cyclide_implicit,
    cyclide_map,
    cyclide_partials,
    gen_cyclide_mesh,
    gen_implicit_surface_mesh,
    gen_nodes_torus_spiral,
    gen_sphere_fibonacci,
    gen_sphere_icosahedral,
    orient_triangles,
    torus_map,
    torus_unmap,
)


def euler_characteristic(mesh):
    v = len(mesh.nodes)
    f = mesh.n_elements
    edges = set()
    for tri in mesh.triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            edges.add((min(a, b), max(a, b)))
    return v - len(edges) + f


def edge_share_counts(mesh):
    counts = {}
    for tri in mesh.triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            counts[key] = counts.get(key, 0) + 1
    return np.array(list(counts.values()))


# --- torus ---------------------------------------------------------------

def test_torus_map_axis_points():
    assert np.allclose(torus_map(0.0, 0.0), (4.0, 0.0, 0.0), atol=1e-15)
    assert np.allclose(torus_map(np.pi / 2, np.pi), (0.0, 2.0, 0.0), atol=1e-15)


def test_torus_roundtrip(rng):
    phi = rng.uniform(-np.pi, np.pi, 1000)
    theta = rng.uniform(-np.pi, np.pi, 1000)
    xyz = torus_map(phi, theta)
    p2, t2 = torus_unmap(xyz)
    dphi = np.abs(np.angle(np.exp(1j * (p2 - phi))))
    dtheta = np.abs(np.angle(np.exp(1j * (t2 - theta))))
    assert np.max(dphi) < 1e-12
    assert np.max(dtheta) < 1e-12


def test_torus_mesh_on_surface(torus_1024):
    pts = torus_1024.nodes.points
    rho = np.hypot(pts[:, 0], pts[:, 1])
    res = (rho - TORUS_R) ** 2 + pts[:, 2] ** 2 - TORUS_r**2
    assert np.max(np.abs(res)) < 1e-12


def test_torus_mesh_topology(torus_1024):
    assert euler_characteristic(torus_1024) == 0
    assert np.all(edge_share_counts(torus_1024) == 2)


def test_torus_mesh_oriented_outward(torus_1024):
    """Signed volume by divergence theorem: 2 pi^2 R r^2 ~ 59.22, positive."""
    pts = torus_1024.nodes.points
    a, b, c = (pts[torus_1024.triangles[:, i]] for i in range(3))
    vol = np.sum(np.einsum("ij,ij->i", a, np.cross(b, c))) / 6.0
    assert vol > 0
    assert abs(vol - 2.0 * np.pi**2 * TORUS_R * TORUS_r**2) < 2.0


# --- sphere refinements ----------------------------------------------------

def test_icosahedron_base_counts():
    mesh = gen_sphere_icosahedral(0)
    assert len(mesh.nodes) == 12
    assert mesh.n_elements == 20


def test_icosahedral_level2_count():
    mesh = gen_sphere_icosahedral(2)
    assert len(mesh.nodes) == 162


def test_icosahedral_nodes_on_sphere(sphere_level3):
    r = np.linalg.norm(sphere_level3.nodes.points, axis=1)
    assert np.max(np.abs(r - 1.0)) < 1e-14


def test_sphere_normals_outward(sphere_level3):
    dots = np.einsum("ij,ij->i", sphere_level3.triangle_normals, sphere_level3.centroids)
    assert np.all(dots > 0)


def test_fibonacci_counts_and_radius():
    mesh = gen_sphere_fibonacci(500)
    assert len(mesh.nodes) == 500
    r = np.linalg.norm(mesh.nodes.points, axis=1)
    assert np.max(np.abs(r - 1.0)) < 1e-13
    assert euler_characteristic(mesh) == 2


def test_flipping_one_face_is_repaired(sphere_level2):
    tris = sphere_level2.triangles.copy()
    tris[5] = tris[5][::-1]
    fixed, normals = orient_triangles(sphere_level2.nodes.points, tris)
    dots = np.einsum("ij,ij->i", normals,
                     sphere_level2.nodes.points[fixed].mean(axis=1))
    assert np.all(dots > 0)


def test_unit_normals(torus_1024, sphere_level2):
    for mesh in (torus_1024, sphere_level2):
        norms = np.linalg.norm(mesh.triangle_normals, axis=1)
        assert np.max(np.abs(norms - 1.0)) < 1e-12


# --- cyclide ---------------------------------------------------------------

def test_cyclide_parameter_validation():
    with pytest.raises(GeometryError):
        CyclideSpec(a=1.0, b=1.2)  # needs a > c >= 0, b <= a


def test_cyclide_mesh_on_surface():
    mesh = gen_cyclide_mesh(CyclideSpec(), 1024)
    res = cyclide_implicit(CyclideSpec(), mesh.nodes.points)
    assert np.max(np.abs(res)) < 1e-10
    assert euler_characteristic(mesh) == 0


def test_cyclide_partials_match_fd():
    spec = CyclideSpec()
    phi = np.array([0.3, -2.1, 1.7])
    theta = np.array([0.9, 2.5, -0.4])
    dphi, dtheta = cyclide_partials(spec, phi, theta)
    eps = 1e-6
    fd_phi = (cyclide_map(spec, phi + eps, theta) - cyclide_map(spec, phi - eps, theta)) / (2 * eps)
    fd_theta = (cyclide_map(spec, phi, theta + eps) - cyclide_map(spec, phi, theta - eps)) / (2 * eps)
    assert np.max(np.abs(dphi - fd_phi)) < 1e-8
    assert np.max(np.abs(dtheta - fd_theta)) < 1e-8


# --- implicit deformations ---------------------------------------------------

def test_deformed_sphere_gamma_zero_identity(sphere_level2):
    mesh = gen_implicit_surface_mesh(DeformedSphereSpec(gamma=0.0), sphere_level2)
    assert np.max(np.abs(mesh.nodes.points - sphere_level2.nodes.points)) < 1e-12


def test_deformed_sphere_compresses_poles(sphere_level2):
    mesh = gen_implicit_surface_mesh(DeformedSphereSpec(gamma=0.8), sphere_level2)
    base_z = np.abs(sphere_level2.nodes.points[:, 2])
    pole = np.argmax(base_z)
    assert abs(mesh.nodes.points[pole, 2]) < base_z[pole]
    # equatorial nodes stay on the unit circle
    eq = np.argmin(base_z)
    assert abs(np.linalg.norm(mesh.nodes.points[eq]) - 1.0) < 1e-6


def test_bumpy_sphere_zero_amplitude_is_sphere(sphere_level2):
    spec = BumpySphereSpec(centers=np.zeros((0, 3)))
    mesh = gen_implicit_surface_mesh(spec, sphere_level2)
    r = np.linalg.norm(mesh.nodes.points, axis=1)
    assert np.max(np.abs(r - 1.0)) < 1e-12


def test_bumpy_sphere_residual_small(sphere_level2):
    spec = BumpySphereSpec()
    mesh = gen_implicit_surface_mesh(spec, sphere_level2)
    assert np.max(np.abs(spec.residual(mesh.nodes.points))) < 1e-10


def test_gamma_out_of_range():
    with pytest.raises(GeometryError):
        DeformedSphereSpec(gamma=1.0)
