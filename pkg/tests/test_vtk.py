"""ASCII VTK writer: golden bytes, independent parse-back, validation."""
from types import SimpleNamespace

import numpy as np
import pytest

from nfrbf.errors import ConfigError
from nfrbf.vtk_io import write_vtk


def tiny_mesh():
    return SimpleNamespace(
        nodes=SimpleNamespace(points=np.array([[0.0, 0.0, 0.0],
                                               [1.0, 0.0, 0.0],
                                               [0.0, 1.0, 0.0]])),
        triangles=np.array([[0, 1, 2]]),
    )


GOLDEN = """# vtk DataFile Version 3.0
nfrbf frame
ASCII
DATASET POLYDATA
POINTS 3 double
0 0 0
1 0 0
0 1 0
POLYGONS 1 4
3 0 1 2
POINT_DATA 3
SCALARS u double 1
LOOKUP_TABLE default
0
1
2
"""


def test_golden_bytes(tmp_path):
    path = tmp_path / "frame.vtk"
    write_vtk(tiny_mesh(), {"u": np.array([0.0, 1.0, 2.0])}, str(path))
    assert path.read_text() == GOLDEN


def test_write_is_deterministic(tmp_path):
    a, b = tmp_path / "a.vtk", tmp_path / "b.vtk"
    fields = {"u": np.array([0.3, -1.7, 2.2e-8]), "q": np.array([1.0, 0.5, 0.25])}
    write_vtk(tiny_mesh(), fields, str(a))
    write_vtk(tiny_mesh(), fields, str(b))
    assert a.read_bytes() == b.read_bytes()


def parse_vtk(text):
    """Minimal reader for the subset this package writes."""
    lines = text.strip().split("\n")
    assert lines[0].startswith("# vtk DataFile")
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET POLYDATA"
    i = 4
    tag, n, typ = lines[i].split()
    assert tag == "POINTS" and typ == "double"
    n = int(n)
    pts = np.array([[float(v) for v in lines[i + 1 + r].split()] for r in range(n)])
    i += 1 + n
    tag, m, size = lines[i].split()
    assert tag == "POLYGONS" and int(size) == 4 * int(m)
    m = int(m)
    tris = []
    for r in range(m):
        parts = lines[i + 1 + r].split()
        assert parts[0] == "3"
        tris.append([int(v) for v in parts[1:]])
    i += 1 + m
    assert lines[i] == f"POINT_DATA {n}"
    i += 1
    fields = {}
    while i < len(lines):
        tag, name, typ, comps = lines[i].split()
        assert tag == "SCALARS" and comps == "1"
        assert lines[i + 1] == "LOOKUP_TABLE default"
        fields[name] = np.array([float(lines[i + 2 + r]) for r in range(n)])
        i += 2 + n
    return pts, np.array(tris), fields


def test_roundtrip_through_independent_parser(tmp_path, rng):
    pts = rng.normal(size=(20, 3))
    tris = np.array([[i, (i + 1) % 20, (i + 7) % 20] for i in range(10)])
    mesh = SimpleNamespace(nodes=SimpleNamespace(points=pts), triangles=tris)
    u = rng.normal(size=20)
    q = rng.uniform(0.1, 1.0, size=20)
    path = tmp_path / "round.vtk"
    write_vtk(mesh, {"u": u, "q": q}, str(path))
    rpts, rtris, rfields = parse_vtk(path.read_text())
    assert np.array_equal(rpts, pts)
    assert np.array_equal(rtris, tris)
    assert np.array_equal(rfields["u"], u)
    assert np.array_equal(rfields["q"], q)


def test_planar_points_get_zero_z(tmp_path):
    mesh = SimpleNamespace(
        nodes=SimpleNamespace(points=np.array([[0.25, 0.5], [1.0, 0.0], [0.0, 1.0]])),
        triangles=np.array([[0, 1, 2]]),
    )
    path = tmp_path / "flat.vtk"
    write_vtk(mesh, {}, str(path))
    pts, tris, fields = parse_vtk(path.read_text())
    assert pts.shape == (3, 3)
    assert (pts[:, 2] == 0.0).all()
    assert fields == {}


def test_field_validation(tmp_path):
    path = tmp_path / "bad.vtk"
    with pytest.raises(ConfigError):
        write_vtk(tiny_mesh(), {"u": np.zeros(5)}, str(path))
    with pytest.raises(ConfigError):
        write_vtk(tiny_mesh(), {"bad name": np.zeros(3)}, str(path))
    with pytest.raises(ConfigError):
        write_vtk(tiny_mesh(), {"": np.zeros(3)}, str(path))


def test_unwritable_path_raises(tmp_path):
    with pytest.raises(ConfigError):
        write_vtk(tiny_mesh(), {}, str(tmp_path / "missing_dir" / "frame.vtk"))
