"""Quadrature on smooth closed triangulated surfaces.

Each curved element is flattened through a projection point p_j chosen so
that the three cutting planes (one per edge neighbor) contain the shared
edges; stencil nodes are mapped along rays through p_j onto the element's
plane, a flat rule is built there, and each weight is corrected by the
Jacobian of the local plane-to-surface map, obtained by differentiating
per-coordinate interpolants of the surface positions.
"""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, QuadratureError
from .geometry.meshio import FLOAT_FMT
from .geometry.planar import covering_radius
from .geometry.surfaces import SurfaceMesh, orient_triangles
from .interpolate import (
    PhsSpec,
    PolySpec,
    assemble_saddle_batch,
    check_compatibility,
    nearest_neighbors,
    polynomial_gradient,
    solve_saddle_batch,
)
from .quad_flat import QuadratureRule, monomial_integrals_batch, phs_integrals_batch

log = logging.getLogger(__name__)

PROJECTION_COND_MAX = 1e8
PROJECTION_DIST_FACTOR = 1e6
PREIMAGE_T_MIN = 1e-8
STENCIL_PAD = 12
JACOBIAN_DEGREE_BOOST = 2
JACOBIAN_STENCIL_MARGIN = 6


def jacobian_poly(poly: PolySpec, k: int) -> PolySpec:
    """Polynomial tail for the plane-to-surface coordinate interpolants.

    The weight error of the rule scales like h^(deg+2), but a Jacobian
    differentiated from a degree-deg reconstruction is only accurate to
    h^deg, which would dominate.  Boost the coordinate fit by up to two
    degrees when the stencil leaves enough slack.  The margin matters:
    with only k - count ~ 4 free nodes the boosted fit turns erratic on
    lattice-like stencils (torus, n in the low thousands), while margin
    >= 6 is clean for every degree/k pairing used by the defaults.
    """
    best = poly.deg
    for d in range(poly.deg + 1, poly.deg + JACOBIAN_DEGREE_BOOST + 1):
        if PolySpec(d, dim=poly.dim).count <= k - JACOBIAN_STENCIL_MARGIN:
            best = d
    return PolySpec(best, dim=poly.dim) if best != poly.deg else poly


def consistent_normals(mesh: SurfaceMesh) -> np.ndarray:
    """Outward unit normals; the mesh construction already orients them."""
    if mesh.triangle_normals is not None:
        return mesh.triangle_normals
    _, normals = orient_triangles(mesh.nodes.points, mesh.triangles, mesh.adjacency)
    return normals


@dataclass
class ElementFrame:
    """Element plane plus the projection point used to flatten its stencil."""

    triangle: int
    origin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    normal: np.ndarray
    projection: np.ndarray = None  # None in orthogonal fallback mode
    fallback: bool = False


def _frame_arrays(points, triangles, normals):
    """Vectorized frame construction: origin v0, e1 along v0->v1, e2 = n x e1."""
    v0 = points[triangles[:, 0]]
    v1 = points[triangles[:, 1]]
    v2 = points[triangles[:, 2]]
    e1 = v1 - v0
    e1 = e1 / np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(normals, e1)
    verts2 = np.zeros((len(triangles), 3, 2))
    verts2[:, 1, 0] = np.einsum("ij,ij->i", v1 - v0, e1)
    verts2[:, 2, 0] = np.einsum("ij,ij->i", v2 - v0, e1)
    verts2[:, 2, 1] = np.einsum("ij,ij->i", v2 - v0, e2)
    return v0, e1, e2, verts2


def projection_points(points, triangles, normals, adjacency, h: float):
    """Batched cutting-plane intersections p_j with fallback detection.

    Solves, per triangle j with edge neighbors j_r sharing edge vertex v_r,
        (n_j - n_{j_r}) . (p - v_r) = 0,  r = 0..2.
    Each cutting plane contains its shared edge because n_j - n_{j_r} is
    orthogonal to the edge direction.  Rows marked fallback use orthogonal
    projection instead (p at infinity along n_j).
    """
    m = len(triangles)
    nbr = adjacency
    mats = normals[:, None, :] - normals[nbr]          # (m, 3, 3)
    rhs = np.einsum("mrj,mrj->mr", mats, points[triangles])
    sv = np.linalg.svd(mats, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = sv[:, 0] / sv[:, -1]
    cond = np.where(np.isfinite(cond), cond, np.inf)
    solvable = cond < PROJECTION_COND_MAX
    p = np.zeros((m, 3))
    if np.any(solvable):
        p[solvable] = np.linalg.solve(mats[solvable], rhs[solvable][..., None])[..., 0]
    centroids = points[triangles].mean(axis=1)
    far = np.linalg.norm(p - centroids, axis=1) > PROJECTION_DIST_FACTOR * h
    fallback = ~solvable | far
    return p, fallback, cond


def projection_point(mesh: SurfaceMesh, j: int) -> ElementFrame:
    """Frame (plane basis + projection point) of a single element."""
    points = mesh.nodes.points
    normals = consistent_normals(mesh)
    h = covering_radius(points, mesh.triangles)
    p, fb, _ = projection_points(points, mesh.triangles, normals, mesh.adjacency, h)
    v0, e1, e2, _ = _frame_arrays(points, mesh.triangles, normals)
    return ElementFrame(
        triangle=j, origin=v0[j], e1=e1[j], e2=e2[j], normal=normals[j],
        projection=None if fb[j] else p[j], fallback=bool(fb[j]),
    )


def node_preimages(frame: ElementFrame, nodes: np.ndarray):
    """Planar stencil coordinates for one frame; returns (xi, valid mask).

    Central mode maps x along the ray from the projection point; nodes on
    the far side of p (t <= 0) or with rays parallel to the plane are
    flagged invalid.  Fallback mode projects orthogonally and never drops.
    """
    nodes = np.atleast_2d(np.asarray(nodes, dtype=np.float64))
    o, n = frame.origin, frame.normal
    if frame.fallback or frame.projection is None:
        flat3 = nodes - ((nodes - o) @ n)[:, None] * n
        valid = np.ones(len(nodes), dtype=bool)
    else:
        p = frame.projection
        ray = nodes - p
        denom = ray @ n
        valid = np.abs(denom) > 1e-14 * np.linalg.norm(ray, axis=1)
        t = np.where(valid, ((o - p) @ n) / np.where(valid, denom, 1.0), 0.0)
        valid &= t > PREIMAGE_T_MIN
        flat3 = p + t[:, None] * ray
    xi = np.column_stack([(flat3 - o) @ frame.e1, (flat3 - o) @ frame.e2])
    return xi, valid


def _batch_preimages(cand, v0, e1, e2, normals, proj, fallback):
    """Preimages of candidate stencil nodes for a chunk of elements.

    cand: (m, kk, 3) candidate node coordinates.  Returns xi (m, kk, 2)
    and a validity mask (m, kk).
    """
    o = v0[:, None, :]
    n = normals[:, None, :]
    ray = cand - proj[:, None, :]
    denom = np.einsum("mkj,mkj->mk", ray, n)
    raylen = np.linalg.norm(ray, axis=2)
    valid = np.abs(denom) > 1e-14 * raylen
    top = np.einsum("mj,mj->m", v0 - proj, normals)[:, None]
    t = np.where(valid, top / np.where(valid, denom, 1.0), 0.0)
    valid &= t > PREIMAGE_T_MIN
    flat3 = proj[:, None, :] + t[..., None] * ray

    ortho = cand - np.einsum("mkj,mkj->mk", cand - o, n)[..., None] * n
    fb = fallback[:, None]
    flat3 = np.where(fb[..., None], ortho, flat3)
    valid = np.where(fb, True, valid)

    rel = flat3 - o
    xi = np.stack(
        [np.einsum("mkj,mj->mk", rel, e1), np.einsum("mkj,mj->mk", rel, e2)], axis=2
    )
    return xi, valid


def _select_valid(idx_pad, xi_pad, valid, k, chunk_offset):
    """First k valid candidates per element, preserving nearest-first order."""
    m, kk = valid.shape
    counts = valid.cumsum(axis=1)
    if np.any(counts[:, -1] < k):
        bad = int(np.argmax(counts[:, -1] < k)) + chunk_offset
        raise QuadratureError(
            f"element {bad}: fewer than k={k} usable stencil nodes after "
            "dropping far-side preimages; increase the stencil pad or refine"
        )
    # position each valid entry at its running count - 1; invalid entries park
    # at column k (discarded)
    dest = np.where(valid, counts - 1, k)
    keep = dest < k
    rows = np.repeat(np.arange(m), kk).reshape(m, kk)
    sel_idx = np.empty((m, k), dtype=np.int64)
    sel_xi = np.empty((m, k, 2))
    sel_idx[rows[keep], dest[keep]] = idx_pad[keep]
    sel_xi[rows[keep], dest[keep]] = xi_pad[keep]
    dropped = int(np.sum(~valid[:, :k]))
    return sel_idx, sel_xi, dropped


def local_jacobians(xi: np.ndarray, surface_nodes: np.ndarray, phs: PhsSpec,
                    poly: PolySpec, element_id: int = -1) -> np.ndarray:
    """Jacobian of the plane-to-surface map at each stencil preimage.

    Fits one interpolant per ambient coordinate over the planar stencil
    with the given polynomial tail, differentiates analytically, and
    returns |d_xi1 mu x d_xi2 mu|.
    """
    jac, _ = _batch_jacobians(
        xi[None], surface_nodes[None], phs, poly, element_offset=element_id
    )
    return jac[0]


def _batch_jacobians(xi, surf, phs, poly, mats=None, sols=None, element_offset=0):
    """Jacobian values J(xi_r) for a chunk; optionally reuses saddle solves.

    xi: (m, k, 2) planar stencils; surf: (m, k, 3) surface positions.
    Returns (J, sols) with J of shape (m, k).
    """
    m, k, _ = xi.shape
    origins = xi.mean(axis=1)
    scales = np.linalg.norm(xi - origins[:, None, :], axis=2).max(axis=1)
    if sols is None:
        if mats is None:
            mats = assemble_saddle_batch(xi, origins, scales, phs, poly)
        rhs = np.zeros((m, k + poly.count, 3))
        rhs[:, :k, :] = surf
        sols = solve_saddle_batch(
            mats, rhs, element_ids=np.arange(m) + element_offset
        )
    c = sols[:, :k, -3:]
    d = sols[:, k:, -3:]

    diff = xi[:, :, None, :] - xi[:, None, :, :]
    r = np.linalg.norm(diff, axis=3)
    fac = phs.deriv_over_r(r)
    xhat = (xi - origins[:, None, :]) / scales[:, None, None]
    grads = polynomial_gradient(xhat, poly, scales)

    dmu = np.empty((m, k, 2, 3))
    for axis in range(2):
        rbf_part = np.einsum("mri,mri,mia->mra", fac, diff[..., axis], c)
        dmu[:, :, axis, :] = rbf_part + np.einsum("mrp,mpa->mra", grads[axis], d)
    cross = np.cross(dmu[:, :, 0, :], dmu[:, :, 1, :])
    jac = np.linalg.norm(cross, axis=2)
    if np.any(jac <= 0.0):
        flat = np.argwhere(jac <= 0.0)
        elem = int(flat[0, 0]) + element_offset
        raise QuadratureError(
            f"element {elem}: nonpositive Jacobian {jac[flat[0, 0], flat[0, 1]]:.3e} "
            "at a stencil preimage"
        )
    return jac, sols


@dataclass
class SurfaceRule(QuadratureRule):
    """Flat-rule container plus surface diagnostics (one row per element)."""

    diagnostics: dict = field(default_factory=dict)

    def write_diagnostics_csv(self, path) -> None:
        cols = ["element", "fallback", "cond_est", "min_jacobian", "negative_weights"]
        with open(str(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for row in zip(
                self.diagnostics["element"],
                self.diagnostics["fallback"],
                self.diagnostics["cond_est"],
                self.diagnostics["min_jacobian"],
                self.diagnostics["negative_weights"],
            ):
                writer.writerow([
                    int(row[0]), int(row[1]), FLOAT_FMT % row[2],
                    FLOAT_FMT % row[3], int(row[4]),
                ])


def assemble_surface_rule(mesh: SurfaceMesh, k: int = 21, phs: PhsSpec = None,
                          poly: PolySpec = None, chunk: int = 512,
                          jac_poly: PolySpec = None) -> SurfaceRule:
    """Surface quadrature rule: flat weights times nodal Jacobians.

    ``jac_poly`` is the polynomial tail for the coordinate reconstruction
    behind the Jacobians; it defaults to two degrees above ``poly`` when
    the stencil allows (see :func:`jacobian_poly`).
    """
    phs = phs or PhsSpec()
    poly = poly or PolySpec(deg=2, dim=2)
    check_compatibility(phs, poly, k)
    if jac_poly is None:
        jac_poly = jacobian_poly(poly, k)
    check_compatibility(phs, jac_poly, k)
    points = mesh.nodes.points
    triangles = mesh.triangles
    n, m = len(points), len(triangles)
    if k > n:
        raise ConfigError(f"stencil size {k} exceeds node count {n}")
    normals = consistent_normals(mesh)
    h = covering_radius(points, triangles)
    proj, fallback, cond = projection_points(points, triangles, normals, mesh.adjacency, h)
    nfb = int(fallback.sum())
    if nfb:
        log.info("%d of %d elements use orthogonal-projection fallback", nfb, m)
    v0, e1, e2, verts2 = _frame_arrays(points, triangles, normals)

    tree = cKDTree(points)
    centroids = points[triangles].mean(axis=1)
    pad = min(STENCIL_PAD, n - k)
    idx_pad = nearest_neighbors(tree, centroids, points, k, extra=pad)

    weights = np.zeros(n)
    diag = {"element": np.arange(m), "fallback": fallback.astype(np.int64),
            "cond_est": cond, "min_jacobian": np.empty(m),
            "negative_weights": np.empty(m, dtype=np.int64)}
    dropped_total = 0
    for lo in range(0, m, chunk):
        hi = min(lo + chunk, m)
        sl = slice(lo, hi)
        cand = points[idx_pad[sl]]
        xi_pad, valid = _batch_preimages(
            cand, v0[sl], e1[sl], e2[sl], normals[sl], proj[sl], fallback[sl]
        )
        sel_idx, xi, ndrop = _select_valid(idx_pad[sl], xi_pad, valid, k, lo)
        dropped_total += ndrop

        origins = xi.mean(axis=1)
        scales = np.linalg.norm(xi - origins[:, None, :], axis=2).max(axis=1)
        mats = assemble_saddle_batch(xi, origins, scales, phs, poly)
        lphi = phs_integrals_batch(verts2[sl], xi, phs.ell)
        lpi = monomial_integrals_batch(verts2[sl], origins, scales, poly)
        if jac_poly.deg == poly.deg:
            nrhs = np.zeros((hi - lo, k + poly.count, 4))
            nrhs[:, :k, 0] = lphi
            nrhs[:, k:, 0] = lpi
            nrhs[:, :k, 1:] = points[sel_idx]
            sols = solve_saddle_batch(mats, nrhs, element_ids=np.arange(lo, hi))
            w_flat = sols[:, :k, 0]
            jac, _ = _batch_jacobians(xi, points[sel_idx], phs, poly, sols=sols,
                                      element_offset=lo)
        else:
            nrhs = np.zeros((hi - lo, k + poly.count, 1))
            nrhs[:, :k, 0] = lphi
            nrhs[:, k:, 0] = lpi
            sols = solve_saddle_batch(mats, nrhs, element_ids=np.arange(lo, hi))
            w_flat = sols[:, :k, 0]
            jac, _ = _batch_jacobians(xi, points[sel_idx], phs, jac_poly,
                                      element_offset=lo)
        w_surf = w_flat * jac
        np.add.at(weights, sel_idx.ravel(), w_surf.ravel())
        diag["min_jacobian"][sl] = jac.min(axis=1)
        diag["negative_weights"][sl] = np.sum(w_surf < 0.0, axis=1)

    if dropped_total:
        log.info("%d far-side stencil candidates dropped and refilled", dropped_total)
    rule = SurfaceRule(
        node_indices=np.arange(n),
        weights=weights,
        domain_measure=float(weights.sum()),
        provenance={
            "ell": phs.ell, "deg": poly.deg, "jac_deg": jac_poly.deg, "k": k,
            "n_nodes": n, "n_elements": m, "fallback_elements": nfb,
        },
        diagnostics=diag,
    )
    return rule
