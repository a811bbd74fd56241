"""Mesh and node-set file formats."""
import numpy as np
import pytest

from nfrbf.errors import GeometryError
from nfrbf.geometry import (
    gen_nodes_square,
    read_mesh,
    read_nodes_csv,
    read_obj,
    read_off,
    write_nodes_csv,
    write_off,
)


def test_off_roundtrip(tmp_path, sphere_level2):
    path = tmp_path / "s.off"
    write_off(sphere_level2, str(path))
    back = read_off(str(path))
    assert np.array_equal(back.nodes.points, sphere_level2.nodes.points)
    assert np.array_equal(np.sort(back.triangles, axis=1),
                          np.sort(sphere_level2.triangles, axis=1))


def test_off_with_comments(tmp_path):
    path = tmp_path / "c.off"
    path.write_text(
        "OFF # header\n# a tetrahedron\n4 4 0\n"
        "0 0 0\n1 0 0\n0 1 0\n0 0 1\n"
        "3 0 1 2\n3 0 1 3\n3 1 2 3\n3 0 2 3\n"
    )
    mesh = read_off(str(path))
    assert len(mesh.nodes) == 4
    assert mesh.n_elements == 4


def test_off_rejects_quads(tmp_path):
    path = tmp_path / "q.off"
    path.write_text("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 1\n4 0 1 2 3\n")
    with pytest.raises(GeometryError):
        read_off(str(path))


def test_off_missing_header(tmp_path):
    path = tmp_path / "x.off"
    path.write_text("3 1 0\n0 0 0\n1 0 0\n0 1 1\n3 0 1 2\n")
    with pytest.raises(GeometryError):
        read_off(str(path))


def test_obj_roundtrip_via_off(tmp_path, sphere_level2):
    path = tmp_path / "s.obj"
    pts = sphere_level2.nodes.points
    with open(path, "w") as f:
        f.write("# exported\n")
        for p in pts:
            f.write("v %.17g %.17g %.17g\n" % tuple(p))
        for t in sphere_level2.triangles:
            f.write(f"f {t[0]+1}/1 {t[1]+1}/2 {t[2]+1}/3\n")
    mesh = read_obj(str(path))
    assert np.allclose(mesh.nodes.points, pts)
    assert mesh.n_elements == sphere_level2.n_elements


def test_obj_negative_indices(tmp_path):
    path = tmp_path / "n.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
                    "f -4 -3 -2\nf -4 -3 -1\nf -3 -2 -1\nf -4 -2 -1\n")
    mesh = read_obj(str(path))
    assert len(mesh.nodes) == 4
    assert mesh.n_elements == 4


def test_read_mesh_dispatch(tmp_path, sphere_level2):
    off = tmp_path / "m.off"
    write_off(sphere_level2, str(off))
    assert read_mesh(str(off)).n_elements == sphere_level2.n_elements
    with pytest.raises(GeometryError):
        read_mesh(str(tmp_path / "m.stl"))


def test_nodes_csv_roundtrip(tmp_path):
    ns = gen_nodes_square("repulsion", 300, seed=5)
    path = tmp_path / "nodes.csv"
    write_nodes_csv(ns, str(path))
    back = read_nodes_csv(str(path))
    assert np.array_equal(back.points, ns.points)
    assert np.array_equal(back.boundary, ns.boundary)


def test_nodes_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(GeometryError):
        read_nodes_csv(str(path))
