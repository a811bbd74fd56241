"""Node sets on flat domains.

Two families for the square: a regular equilateral tiling with equally
spaced boundary nodes, and a seeded repulsion family (Lloyd relaxation
with pinned boundary nodes, optional clustering toward the top and
bottom edges).  Both are deterministic given their full argument list.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Voronoi, cKDTree

from ..errors import GeometryError

LLOYD_SWEEPS = 30
CLUSTER_STRENGTH = 0.4


@dataclass
class NodeSet:
    """Points of one discretization, with boundary flags for flat domains.

    ``boundary`` is None for node sets that live on closed surfaces.
    """

    points: np.ndarray
    boundary: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if self.points.ndim != 2 or self.points.shape[1] not in (2, 3):
            raise GeometryError(f"points must be (n, 2) or (n, 3), got {self.points.shape}")
        if self.boundary is not None:
            self.boundary = np.asarray(self.boundary, dtype=bool)
            if self.boundary.shape != (len(self.points),):
                raise GeometryError("boundary flags must match the number of points")
        if len(self.points) >= 2:
            d, _ = cKDTree(self.points).query(self.points, k=2)
            if np.min(d[:, 1]) <= 0.0:
                raise GeometryError("node set contains duplicated points")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)


def _boundary_square(m: int) -> np.ndarray:
    """4*m equally spaced nodes tracing the unit-square boundary, corners once."""
    t = np.arange(m) / m
    bottom = np.column_stack([t, np.zeros(m)])
    right = np.column_stack([np.ones(m), t])
    top = np.column_stack([1.0 - t, np.ones(m)])
    left = np.column_stack([np.zeros(m), 1.0 - t])
    return np.vstack([bottom, right, top, left])


def _regular_interior(s: float) -> np.ndarray:
    """Equilateral-lattice interior of the unit square with pitch s."""
    hrow = s * math.sqrt(3.0) / 2.0
    nrow = int(math.floor((1.0 - 1.2 * hrow) / hrow)) + 1
    y0 = 0.5 * (1.0 - (nrow - 1) * hrow)
    xmargin = 0.45 * s
    rows = []
    for j in range(nrow):
        off = 0.5 * s * (j % 2)
        i0 = int(math.ceil((xmargin - off) / s))
        i1 = int(math.floor((1.0 - xmargin - off) / s))
        xs = off + np.arange(i0, i1 + 1, dtype=np.float64) * s
        ys = np.full(xs.shape, y0 + j * hrow)
        rows.append(np.column_stack([xs, ys]))
    return np.vstack(rows)


def _region_centroid(verts: np.ndarray) -> np.ndarray:
    """Area centroid of a convex polygon given by its vertices (any order)."""
    c = verts.mean(axis=0)
    ang = np.arctan2(verts[:, 1] - c[1], verts[:, 0] - c[0])
    v = verts[np.argsort(ang)]
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * np.sum(cross)
    if abs(area) < 1e-300:
        return c
    cx = np.sum((x + xn) * cross) / (6.0 * area)
    cy = np.sum((y + yn) * cross) / (6.0 * area)
    return np.array([cx, cy])


def _lloyd_sweeps(interior: np.ndarray, fixed: np.ndarray, sweeps: int, fringe: float) -> np.ndarray:
    """Centroidal relaxation of interior points; ``fixed`` points are pinned.

    Points within ``fringe`` of an edge are mirrored across it so that the
    Voronoi cells of near-boundary points are correctly clipped to the square.
    """
    pts = interior.copy()
    for _ in range(sweeps):
        allpts = np.vstack([pts, fixed])
        mirrors = []
        for axis in (0, 1):
            lo = allpts[allpts[:, axis] < fringe]
            hi = allpts[allpts[:, axis] > 1.0 - fringe]
            mlo, mhi = lo.copy(), hi.copy()
            mlo[:, axis] *= -1.0
            mhi[:, axis] = 2.0 - mhi[:, axis]
            mirrors.extend([mlo, mhi])
        vor = Voronoi(np.vstack([allpts] + mirrors))
        new = pts.copy()
        for i in range(len(pts)):
            region = vor.regions[vor.point_region[i]]
            if not region or -1 in region:
                continue
            new[i] = _region_centroid(vor.vertices[region])
        pts = np.clip(new, 1e-9, 1.0 - 1e-9)
    return pts


def _cluster_stretch(y: np.ndarray, a: float = CLUSTER_STRENGTH) -> np.ndarray:
    """Mild cosine stretch of [0, 1] that raises density near 0 and 1."""
    return y - a * np.sin(2.0 * np.pi * y) / (2.0 * np.pi)


def gen_nodes_square(
    kind: str,
    n_target: int,
    seed: int = 0,
    cluster_boundary: bool = False,
    lo: float = 0.0,
    hi: float = 1.0,
) -> NodeSet:
    """Generate ~n_target nodes on the square [lo, hi]^2.

    kind 'regular' tiles the interior with an equilateral lattice; kind
    'repulsion' runs seeded Lloyd relaxation with pinned boundary nodes.
    ``cluster_boundary`` stretches interior rows toward the top and bottom
    edges only; boundary nodes stay equally spaced in both cases.
    """
    if kind not in ("regular", "repulsion"):
        raise GeometryError(f"unknown node family {kind!r}")
    if n_target < 16:
        raise GeometryError(f"n_target={n_target} is too small to tile the boundary")

    s = math.sqrt(2.0 / (math.sqrt(3.0) * n_target))
    m = max(4, round(1.0 / s))
    bnd = _boundary_square(m)

    if kind == "regular":
        interior = _regular_interior(1.0 / m)
        if cluster_boundary:
            interior[:, 1] = _cluster_stretch(interior[:, 1])
    else:
        rng = np.random.default_rng(seed)
        n_int = max(4, n_target - len(bnd))
        margin = 0.75 * s
        interior = margin + (1.0 - 2.0 * margin) * rng.random((n_int, 2))
        interior = _lloyd_sweeps(interior, bnd, LLOYD_SWEEPS, fringe=2.5 * s)
        if cluster_boundary:
            interior[:, 1] = _cluster_stretch(interior[:, 1])

    pts = np.vstack([bnd, interior])
    flags = np.zeros(len(pts), dtype=bool)
    flags[: len(bnd)] = True
    pts = lo + (hi - lo) * pts
    return NodeSet(points=pts, boundary=flags)


def scale_factor(node_set: NodeSet) -> float:
    """Rough lattice pitch implied by the node count (unit-square convention)."""
    side = np.ptp(node_set.points[:, 0])
    return side * math.sqrt(2.0 / (math.sqrt(3.0) * len(node_set)))
