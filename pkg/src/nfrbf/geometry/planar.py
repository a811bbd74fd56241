"""Planar triangulations and mesh-scale measures."""

from dataclasses import dataclass, field

import numpy as np
import scipy.spatial
from scipy.spatial import QhullError

from ..errors import GeometryError
from .nodes import NodeSet


@dataclass
class PlanarMesh:
    """Delaunay triangulation of a flat node set.

    ``triangles`` indexes into ``nodes.points``; ``centroids`` are the
    element centroids used as stencil centers.
    """

    nodes: NodeSet
    triangles: np.ndarray
    centroids: np.ndarray = field(default=None)
    _qhull: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        if self.centroids is None:
            self.centroids = self.nodes.points[self.triangles].mean(axis=1)

    @property
    def n_elements(self) -> int:
        return len(self.triangles)


def delaunay(nodes: NodeSet) -> PlanarMesh:
    """Delaunay triangulation of a 2-D node set; rejects degenerate input."""
    if nodes.dim != 2:
        raise GeometryError("delaunay expects 2-D nodes")
    try:
        qh = scipy.spatial.Delaunay(nodes.points)
    except QhullError as exc:
        raise GeometryError(f"degenerate node geometry, triangulation failed: {exc}") from exc
    if qh.coplanar.size:
        raise GeometryError("triangulation dropped input points (near-duplicate nodes?)")
    tris = np.array(qh.simplices, dtype=np.int64)
    tris = _orient_ccw(nodes.points, tris)
    return PlanarMesh(nodes=nodes, triangles=tris, _qhull=qh)


def _orient_ccw(points: np.ndarray, tris: np.ndarray) -> np.ndarray:
    a, b, c = points[tris[:, 0]], points[tris[:, 1]], points[tris[:, 2]]
    cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    flip = cross < 0.0
    out = tris.copy()
    out[flip, 1], out[flip, 2] = tris[flip, 2], tris[flip, 1]
    return out


def _points_tris(mesh_or_points, tris):
    """Accept either (mesh, None) or (points, triangles)."""
    if tris is None:
        return mesh_or_points.nodes.points, mesh_or_points.triangles
    return np.asarray(mesh_or_points), np.asarray(tris)


def triangle_areas(points: np.ndarray, tris: np.ndarray = None) -> np.ndarray:
    points, tris = _points_tris(points, tris)
    a, b, c = points[tris[:, 0]], points[tris[:, 1]], points[tris[:, 2]]
    if points.shape[1] == 2:
        cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
        return 0.5 * np.abs(cross)
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def circumradii(points: np.ndarray, tris: np.ndarray = None) -> np.ndarray:
    """Circumradius of each (possibly embedded) triangle: abc / (4A)."""
    points, tris = _points_tris(points, tris)
    a, b, c = points[tris[:, 0]], points[tris[:, 1]], points[tris[:, 2]]
    la = np.linalg.norm(b - c, axis=1)
    lb = np.linalg.norm(c - a, axis=1)
    lc = np.linalg.norm(a - b, axis=1)
    area = triangle_areas(points, tris)
    if np.any(area <= 0.0):
        raise GeometryError("mesh contains a degenerate (zero-area) triangle")
    return la * lb * lc / (4.0 * area)


def covering_radius(points: np.ndarray, tris: np.ndarray = None) -> float:
    """Mesh norm h: the largest circumradius over the triangulation.

    For flat covering triangulations this equals the covering radius
    sup_x min_i |x - x_i|; on embedded surface meshes it is the standard
    flat-triangle proxy for the same quantity.
    """
    return float(np.max(circumradii(points, tris)))


def circumcenters(points: np.ndarray, tris: np.ndarray = None):
    """Circumcenters and circumradii of planar triangles."""
    points, tris = _points_tris(points, tris)
    a, b, c = points[tris[:, 0]], points[tris[:, 1]], points[tris[:, 2]]
    ab, ac = b - a, c - a
    d = 2.0 * (ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0])
    if np.any(np.abs(d) < 1e-300):
        raise GeometryError("degenerate triangle in circumcenter computation")
    ab2 = np.sum(ab * ab, axis=1)
    ac2 = np.sum(ac * ac, axis=1)
    ux = (ac[:, 1] * ab2 - ab[:, 1] * ac2) / d
    uy = (ab[:, 0] * ac2 - ac[:, 0] * ab2) / d
    centers = a + np.column_stack([ux, uy])
    radii = np.hypot(ux, uy)
    return centers, radii
