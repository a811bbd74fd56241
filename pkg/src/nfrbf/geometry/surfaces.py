"""Closed triangulated surfaces: torus, sphere, Dupin cyclide, implicit deformations.

All generators return watertight meshes with consistently outward-oriented
triangles.  Parametrized families (torus, cyclide) are meshed by a staggered
lattice in parameter space whose rows sit on lines of constant theta; the
stagger keeps the mapped triangles close to equilateral.
"""

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import ConvexHull

from ..errors import GeometryError
from .nodes import NodeSet

TORUS_R = 3.0
TORUS_r = 1.0


@dataclass
class SurfaceMesh:
    """Watertight oriented triangle mesh embedded in R^3."""

    nodes: NodeSet
    triangles: np.ndarray
    triangle_normals: np.ndarray = field(default=None)
    adjacency: np.ndarray = field(default=None)

    def __post_init__(self):
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        if self.nodes.dim != 3:
            raise GeometryError("surface meshes need 3-D nodes")
        if self.adjacency is None:
            self.adjacency = build_adjacency(self.triangles, n_nodes=len(self.nodes))
        if self.triangle_normals is None:
            self.triangles, self.triangle_normals = orient_triangles(
                self.nodes.points, self.triangles, self.adjacency
            )
            self.adjacency = build_adjacency(self.triangles, n_nodes=len(self.nodes))

    @property
    def n_elements(self) -> int:
        return len(self.triangles)

    @property
    def centroids(self) -> np.ndarray:
        return self.nodes.points[self.triangles].mean(axis=1)


def build_adjacency(triangles: np.ndarray, n_nodes: int) -> np.ndarray:
    """Edge-neighbor table: adjacency[t, r] shares edge (tri[t,r], tri[t,r+1]).

    Raises if the mesh is not a closed 2-manifold (every edge in exactly
    two triangles).
    """
    edge_owner = defaultdict(list)
    for t, tri in enumerate(triangles):
        for r in range(3):
            a, b = tri[r], tri[(r + 1) % 3]
            edge_owner[(min(a, b), max(a, b))].append((t, r))
    adj = np.full((len(triangles), 3), -1, dtype=np.int64)
    for edge, owners in edge_owner.items():
        if len(owners) != 2:
            raise GeometryError(
                f"mesh is not watertight: edge {edge} belongs to {len(owners)} triangle(s)"
            )
        (t1, r1), (t2, r2) = owners
        adj[t1, r1] = t2
        adj[t2, r2] = t1
    used = np.unique(triangles)
    if len(used) != n_nodes:
        raise GeometryError("mesh leaves some nodes unreferenced")
    return adj


def orient_triangles(points: np.ndarray, triangles: np.ndarray, adjacency=None):
    """Make winding consistent by flood fill, then globally outward.

    Returns (triangles, unit_normals).  Outwardness is fixed by requiring
    positive signed volume; non-orientable input raises.
    """
    tris = triangles.copy()
    m = len(tris)
    # edge -> (triangle, directed?) map rebuilt locally so we can flood before
    # any consistent adjacency exists
    edge_owner = defaultdict(list)
    for t, tri in enumerate(tris):
        for r in range(3):
            a, b = tri[r], tri[(r + 1) % 3]
            edge_owner[(min(a, b), max(a, b))].append(t)
    seen = np.zeros(m, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        t = stack.pop()
        ta, tb, tc = tris[t]
        directed = {(ta, tb), (tb, tc), (tc, ta)}
        for r in range(3):
            a, b = tris[t][r], tris[t][(r + 1) % 3]
            for o in edge_owner[(min(a, b), max(a, b))]:
                if o == t:
                    continue
                oa, ob, oc = tris[o]
                odir = {(oa, ob), (ob, oc), (oc, oa)}
                same_dir = (a, b) in odir
                if not seen[o]:
                    if same_dir:
                        tris[o][1], tris[o][2] = tris[o][2], tris[o][1]
                    seen[o] = True
                    stack.append(o)
                elif same_dir:
                    raise GeometryError("mesh is non-orientable")
    if not seen.all():
        raise GeometryError("mesh has more than one connected component")
    v0, v1, v2 = points[tris[:, 0]], points[tris[:, 1]], points[tris[:, 2]]
    volume = np.sum(np.einsum("ij,ij->i", v0, np.cross(v1, v2))) / 6.0
    if volume < 0.0:
        tris[:, [1, 2]] = tris[:, [2, 1]]
    raw = np.cross(points[tris[:, 1]] - points[tris[:, 0]], points[tris[:, 2]] - points[tris[:, 0]])
    norms = np.linalg.norm(raw, axis=1)
    if np.any(norms <= 0.0):
        raise GeometryError("degenerate triangle while orienting mesh")
    return tris, raw / norms[:, None]


# ---------------------------------------------------------------------------
# torus


def torus_map(phi: np.ndarray, theta: np.ndarray, R: float = TORUS_R, r: float = TORUS_r):
    """Embed parameter angles into R^3 on the torus of radii (R, r)."""
    phi = np.asarray(phi, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    rho = R + r * np.cos(theta)
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), r * np.sin(theta)], axis=-1)


def torus_unmap(x: np.ndarray, R: float = TORUS_R, r: float = TORUS_r, tol: float = 1e-8):
    """Recover (phi, theta) in (-pi, pi] from torus points; off-surface input raises."""
    x = np.asarray(x, dtype=np.float64)
    rho = np.hypot(x[..., 0], x[..., 1])
    dist = np.abs(np.hypot(rho - R, x[..., 2]) - r)
    if np.any(dist > tol):
        raise GeometryError(f"point is {float(np.max(dist)):.3e} from the torus surface")
    phi = np.arctan2(x[..., 1], x[..., 0])
    theta = np.arctan2(x[..., 2], rho - R)
    return phi, theta


def _staggered_lattice(n_phi: int, n_theta: int):
    """Staggered periodic lattice on (-pi, pi]^2 plus its triangulation.

    Node (i, j) sits at phi = (i + j/2) dphi, theta = j dtheta; n_theta must
    be even so the stagger closes up across the theta period.
    """
    if n_theta % 2:
        raise GeometryError("staggered lattice needs an even number of theta rows")
    dphi = 2.0 * math.pi / n_phi
    dtheta = 2.0 * math.pi / n_theta
    jj, ii = np.meshgrid(np.arange(n_theta), np.arange(n_phi), indexing="ij")
    phi = ((ii + 0.5 * jj) * dphi + math.pi) % (2.0 * math.pi) - math.pi
    theta = jj * dtheta - math.pi
    tris = []
    half = n_theta // 2
    for j in range(n_theta):
        jn = (j + 1) % n_theta
        shift = half if j == n_theta - 1 else 0
        for i in range(n_phi):
            i1 = (i + 1) % n_phi
            up_i = (i + shift) % n_phi
            up_i1 = (i + 1 + shift) % n_phi
            a = j * n_phi + i
            b = j * n_phi + i1
            c = jn * n_phi + up_i
            d = jn * n_phi + up_i1
            tris.append((a, b, c))
            tris.append((b, d, c))
    return phi.ravel(), theta.ravel(), np.array(tris, dtype=np.int64)


def _lattice_shape(n_target: int, aspect: float):
    """Pick (n_phi, n_theta even) with n_phi*n_theta ~ n_target, n_phi/n_theta ~ aspect."""
    n_theta = max(4, int(round(math.sqrt(n_target / aspect))))
    n_theta += n_theta % 2
    n_phi = max(4, int(round(n_target / n_theta)))
    return n_phi, n_theta


def gen_nodes_torus_spiral(n_target: int, R: float = TORUS_R, r: float = TORUS_r) -> SurfaceMesh:
    """Spiral node family on the torus: constant-theta rings, staggered in phi.

    The stagger of half a phi-spacing per ring makes the node diagonals run
    at roughly 60 degrees to the rings once mapped to the surface, which
    avoids thin mapped triangles.
    """
    if R <= r or r <= 0.0:
        raise GeometryError("torus needs R > r > 0")
    # match physical edge lengths: r*dtheta ~ (sqrt(3)/2) * R * dphi
    aspect = math.sqrt(3.0) * R / (2.0 * r)
    n_phi, n_theta = _lattice_shape(n_target, aspect)
    phi, theta, tris = _staggered_lattice(n_phi, n_theta)
    pts = torus_map(phi, theta, R, r)
    return SurfaceMesh(nodes=NodeSet(points=pts), triangles=tris)


# ---------------------------------------------------------------------------
# spheres

_ICO_T = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array(
    [
        (-1, _ICO_T, 0), (1, _ICO_T, 0), (-1, -_ICO_T, 0), (1, -_ICO_T, 0),
        (0, -1, _ICO_T), (0, 1, _ICO_T), (0, -1, -_ICO_T), (0, 1, -_ICO_T),
        (_ICO_T, 0, -1), (_ICO_T, 0, 1), (-_ICO_T, 0, -1), (-_ICO_T, 0, 1),
    ],
    dtype=np.float64,
)
_ICO_FACES = np.array(
    [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ],
    dtype=np.int64,
)


def gen_sphere_icosahedral(level: int) -> SurfaceMesh:
    """Icosahedral unit-sphere mesh with 10*4^level + 2 nodes."""
    if level < 0 or level > 8:
        raise GeometryError("subdivision level must be in 0..8")
    verts = _ICO_VERTS / np.linalg.norm(_ICO_VERTS, axis=1, keepdims=True)
    faces = _ICO_FACES.copy()
    verts = list(map(np.array, verts))
    for _ in range(level):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                p = verts[i] + verts[j]
                verts.append(p / np.linalg.norm(p))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        faces = np.array(new_faces, dtype=np.int64)
    pts = np.array(verts)
    return SurfaceMesh(nodes=NodeSet(points=pts), triangles=faces)


def gen_sphere_fibonacci(n: int) -> SurfaceMesh:
    """Near-uniform n-node sphere mesh from the Fibonacci spiral + convex hull."""
    if n < 16:
        raise GeometryError("need at least 16 nodes for a sphere mesh")
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - (2.0 * i + 1.0) / n
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    ang = i * math.pi * (3.0 - math.sqrt(5.0))
    pts = np.column_stack([rho * np.cos(ang), rho * np.sin(ang), z])
    hull = ConvexHull(pts)
    return SurfaceMesh(nodes=NodeSet(points=pts), triangles=np.array(hull.simplices, dtype=np.int64))


def sphere_bump_centers(count: int = 100, seed: int = 11) -> np.ndarray:
    """Random but roughly even points on the unit sphere (seeded repulsion)."""
    rng = np.random.default_rng(seed)
    p = rng.normal(size=(count, 3))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    for _ in range(60):
        diff = p[:, None, :] - p[None, :, :]
        d2 = np.sum(diff * diff, axis=-1) + np.eye(count)
        force = np.sum(diff / d2[..., None] ** 1.5, axis=1)
        p += 0.02 * force / count**0.5
        p /= np.linalg.norm(p, axis=1, keepdims=True)
    return p


# ---------------------------------------------------------------------------
# Dupin ring cyclide


@dataclass(frozen=True)
class CyclideSpec:
    """Ring cyclide parameters; c is derived from (a, b) so the standard
    parametrization and the implicit quartic describe the same surface."""

    a: float = 1.0
    b: float = 0.98
    d: float = 0.5

    @property
    def c(self) -> float:
        if self.a <= self.b:
            raise GeometryError("ring cyclide needs a > b")
        return math.sqrt(self.a**2 - self.b**2)

    def __post_init__(self):
        if not (self.a > self.c >= 0.0):
            raise GeometryError("ring cyclide needs a > c >= 0")
        if not (self.c < self.d < self.a):
            raise GeometryError("ring regime needs c < d < a")


def cyclide_map(spec: CyclideSpec, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    a, b, c, d = spec.a, spec.b, spec.c, spec.d
    cs_p, sn_p = np.cos(phi), np.sin(phi)
    cs_t, sn_t = np.cos(theta), np.sin(theta)
    w = a - c * cs_p * cs_t
    x = (d * (c - a * cs_p * cs_t) + b * b * cs_p) / w
    y = b * sn_p * (a - d * cs_t) / w
    z = b * sn_t * (c * cs_p - d) / w
    return np.stack([x, y, z], axis=-1)


def cyclide_partials(spec: CyclideSpec, phi: np.ndarray, theta: np.ndarray):
    """Analytic (d/dphi, d/dtheta) of the cyclide parametrization."""
    a, b, c, d = spec.a, spec.b, spec.c, spec.d
    cs_p, sn_p = np.cos(phi), np.sin(phi)
    cs_t, sn_t = np.cos(theta), np.sin(theta)
    w = a - c * cs_p * cs_t
    w_p = c * sn_p * cs_t
    w_t = c * cs_p * sn_t

    nx = d * (c - a * cs_p * cs_t) + b * b * cs_p
    nx_p = d * a * sn_p * cs_t - b * b * sn_p
    nx_t = d * a * cs_p * sn_t
    ny = b * sn_p * (a - d * cs_t)
    ny_p = b * cs_p * (a - d * cs_t)
    ny_t = b * sn_p * d * sn_t
    nz = b * sn_t * (c * cs_p - d)
    nz_p = -b * sn_t * c * sn_p
    nz_t = b * cs_t * (c * cs_p - d)

    def quot(n, n_p, w_d):
        return (n_p * w - n * w_d) / (w * w)

    dp = np.stack([quot(nx, nx_p, w_p), quot(ny, ny_p, w_p), quot(nz, nz_p, w_p)], axis=-1)
    dt = np.stack([quot(nx, nx_t, w_t), quot(ny, ny_t, w_t), quot(nz, nz_t, w_t)], axis=-1)
    return dp, dt


def cyclide_implicit(spec: CyclideSpec, x: np.ndarray) -> np.ndarray:
    """Residual of the cyclide quartic; zero on the surface."""
    a, b, c, d = spec.a, spec.b, spec.c, spec.d
    x = np.asarray(x, dtype=np.float64)
    s = np.sum(x * x, axis=-1)
    lhs = (s + b * b - d * d) ** 2
    rhs = 4.0 * (a * x[..., 0] - c * d) ** 2 + 4.0 * b * b * x[..., 1] ** 2
    return lhs - rhs


def gen_cyclide_mesh(spec: CyclideSpec, n_target: int) -> SurfaceMesh:
    """Staggered-lattice mesh of the ring cyclide in (phi, theta) space."""
    # estimate mean circumference in each parameter direction to pick the aspect
    t = np.linspace(-math.pi, math.pi, 64, endpoint=False)
    pp, tt = np.meshgrid(t, t, indexing="ij")
    dp, dt = cyclide_partials(spec, pp, tt)
    len_p = float(np.mean(np.linalg.norm(dp, axis=-1)))
    len_t = float(np.mean(np.linalg.norm(dt, axis=-1)))
    aspect = math.sqrt(3.0) * len_p / (2.0 * len_t)
    n_phi, n_theta = _lattice_shape(n_target, aspect)
    phi, theta, tris = _staggered_lattice(n_phi, n_theta)
    pts = cyclide_map(spec, phi, theta)
    return SurfaceMesh(nodes=NodeSet(points=pts), triangles=tris)


# ---------------------------------------------------------------------------
# implicit radial deformations of the sphere


@dataclass(frozen=True)
class DeformedSphereSpec:
    """Pole-flattened sphere: 1 = x^2 + y^2 + z^2 / (1 - gamma/(1 + (x^2+y^2)/2.89))."""

    gamma: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise GeometryError("gamma must lie in [0, 1)")

    def residual(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        rho2 = x[..., 0] ** 2 + x[..., 1] ** 2
        denom = 1.0 - self.gamma / (1.0 + rho2 / 2.89)
        return rho2 + x[..., 2] ** 2 / denom - 1.0


@dataclass(frozen=True)
class BumpySphereSpec:
    """Unit sphere with Gaussian radial bumps of width 0.1 and height 0.1 in r^2."""

    centers: np.ndarray = field(default_factory=lambda: sphere_bump_centers())

    def residual(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        d2 = np.sum((x[..., None, :] - self.centers) ** 2, axis=-1)
        bumps = 0.1 * np.sum(np.exp(-d2 / (2.0 * 0.1**2)), axis=-1)
        return np.sum(x * x, axis=-1) - 1.0 - bumps


def gen_implicit_surface_mesh(spec, base: SurfaceMesh, tol: float = 1e-12) -> SurfaceMesh:
    """Project each node of a sphere-topology base mesh radially onto spec's surface.

    The scale factor t solves residual(t * x_hat) = 0 by 1-D root bracketing;
    connectivity is carried over unchanged.
    """
    pts = base.nodes.points
    dirs = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    out = np.empty_like(dirs)
    for i, u in enumerate(dirs):
        f = lambda t: float(spec.residual(t * u))
        lo, hi = 0.5, 1.5
        flo, fhi = f(lo), f(hi)
        grow = 0
        while flo * fhi > 0.0:
            lo *= 0.8
            hi *= 1.25
            flo, fhi = f(lo), f(hi)
            grow += 1
            if grow > 40:
                raise GeometryError(f"could not bracket the surface along node {i}")
        t = brentq(f, lo, hi, xtol=tol, rtol=8.0 * np.finfo(float).eps)
        out[i] = t * u
    return SurfaceMesh(nodes=NodeSet(points=out), triangles=base.triangles.copy())
