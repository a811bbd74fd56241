"""Legacy ASCII VTK output for triangle meshes with nodal scalar fields.

One POLYDATA block (POINTS + POLYGONS) followed by POINT_DATA with a
SCALARS section per field.  All numbers print with 17 significant digits,
so identical inputs produce identical bytes.
"""

import numpy as np

from .errors import ConfigError

FMT = "%.17g"


def write_vtk(mesh, fields: dict, path: str) -> None:
    """Write a triangle mesh plus named nodal scalar fields.

    ``mesh`` is any object with ``nodes.points`` (n, 2 or 3) and
    ``triangles`` (m, 3); 2-D points get z = 0.  Field arrays must have
    one value per node.
    """
    pts = np.asarray(mesh.nodes.points, dtype=np.float64)
    tris = np.asarray(mesh.triangles, dtype=np.int64)
    n = len(pts)
    if pts.shape[1] == 2:
        pts = np.column_stack([pts, np.zeros(n)])
    elif pts.shape[1] != 3:
        raise ConfigError(f"points must be 2-D or 3-D, got shape {pts.shape}")
    for name, values in fields.items():
        if len(np.asarray(values)) != n:
            raise ConfigError(
                f"field {name!r} has {len(np.asarray(values))} values for {n} nodes"
            )
        if not name or any(ch.isspace() for ch in name):
            raise ConfigError(f"field name {name!r} must be non-empty without spaces")

    lines = [
        "# vtk DataFile Version 3.0",
        "nfrbf frame",
        "ASCII",
        "DATASET POLYDATA",
        f"POINTS {n} double",
    ]
    for p in pts:
        lines.append(" ".join(FMT % v for v in p))
    lines.append(f"POLYGONS {len(tris)} {4 * len(tris)}")
    for t in tris:
        lines.append(f"3 {t[0]} {t[1]} {t[2]}")
    lines.append(f"POINT_DATA {n}")
    for name, values in fields.items():
        values = np.asarray(values, dtype=np.float64)
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        for v in values:
            lines.append(FMT % v)
    try:
        with open(path, "w", newline="\n") as f:
            f.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise ConfigError(f"could not write VTK file {path}: {exc}") from exc
