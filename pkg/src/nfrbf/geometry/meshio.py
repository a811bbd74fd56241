"""Mesh and node-set file formats: OFF, OBJ (read), OFF (write), node CSV."""

import numpy as np

from ..errors import GeometryError
from .nodes import NodeSet
from .surfaces import SurfaceMesh

FLOAT_FMT = "%.17g"


def read_off(path: str) -> SurfaceMesh:
    with open(path, "r") as f:
        tokens = []
        for line in f:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise GeometryError(f"{path}: missing OFF header")
    nv, nf = int(tokens[1]), int(tokens[2])
    cursor = 4
    verts = np.array(tokens[cursor : cursor + 3 * nv], dtype=np.float64).reshape(nv, 3)
    cursor += 3 * nv
    faces = []
    for _ in range(nf):
        cnt = int(tokens[cursor])
        if cnt != 3:
            raise GeometryError(f"{path}: only triangle faces are supported, got {cnt}-gon")
        faces.append([int(t) for t in tokens[cursor + 1 : cursor + 4]])
        cursor += 1 + cnt
    return SurfaceMesh(nodes=NodeSet(points=verts), triangles=np.array(faces, dtype=np.int64))


def read_obj(path: str) -> SurfaceMesh:
    verts, faces = [], []
    with open(path, "r") as f:
        for line in f:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(p) for p in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise GeometryError(f"{path}: only triangle faces are supported")
                faces.append([i - 1 if i > 0 else len(verts) + i for i in idx])
    if not verts or not faces:
        raise GeometryError(f"{path}: no usable geometry found")
    return SurfaceMesh(
        nodes=NodeSet(points=np.array(verts, dtype=np.float64)),
        triangles=np.array(faces, dtype=np.int64),
    )


def read_mesh(path: str) -> SurfaceMesh:
    low = path.lower()
    if low.endswith(".off"):
        return read_off(path)
    if low.endswith(".obj"):
        return read_obj(path)
    raise GeometryError(f"unsupported mesh format: {path}")


def write_off(mesh: SurfaceMesh, path: str) -> None:
    pts = mesh.nodes.points
    with open(path, "w") as f:
        f.write("OFF\n")
        f.write(f"{len(pts)} {len(mesh.triangles)} 0\n")
        for p in pts:
            f.write(" ".join(FLOAT_FMT % v for v in p) + "\n")
        for t in mesh.triangles:
            f.write(f"3 {t[0]} {t[1]} {t[2]}\n")


def write_nodes_csv(nodes: NodeSet, path: str) -> None:
    """CSV with header x,y[,z],boundary; boundary is 0/1 (0 on closed surfaces)."""
    cols = ["x", "y", "z"][: nodes.dim]
    flags = nodes.boundary if nodes.boundary is not None else np.zeros(len(nodes), dtype=bool)
    with open(path, "w") as f:
        f.write(",".join(cols + ["boundary"]) + "\n")
        for p, b in zip(nodes.points, flags):
            f.write(",".join(FLOAT_FMT % v for v in p) + f",{int(b)}\n")


def read_nodes_csv(path: str) -> NodeSet:
    with open(path, "r") as f:
        header = f.readline().strip().split(",")
        if header[-1] != "boundary" or header[0] != "x":
            raise GeometryError(f"{path}: expected header x,y[,z],boundary")
        dim = len(header) - 1
        rows = [line.strip().split(",") for line in f if line.strip()]
    data = np.array(rows, dtype=np.float64)
    if data.shape[1] != dim + 1:
        raise GeometryError(f"{path}: row width does not match header")
    return NodeSet(points=data[:, :dim], boundary=data[:, dim] != 0.0)
