"""Local polyharmonic-spline interpolation with appended polynomials.

Each stencil solves the symmetric saddle system

    [ A   P ] [c]   [f]
    [ P^T 0 ] [d] = [0]

where A_ij = phi(|x_i - x_j|) uses raw coordinates and P holds monomials of
the shifted/scaled local coordinates (origin at the stencil centroid, scale
the max stencil radius).  The same systems, solved against integrated
right-hand sides, produce quadrature weights in the quad modules.
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, SingularSystemError

log = logging.getLogger(__name__)

COND_WARN = 1e12
COND_ERROR = 1e14


@dataclass(frozen=True)
class PhsSpec:
    """Polyharmonic spline r^ell (odd ell) or r^ell log r (even ell)."""

    ell: int = 3

    def __post_init__(self):
        if self.ell < 1:
            raise ConfigError("polyharmonic order ell must be >= 1")

    def __call__(self, r):
        r = np.asarray(r, dtype=np.float64)
        if self.ell % 2 == 1:
            return r**self.ell
        with np.errstate(divide="ignore", invalid="ignore"):
            out = r**self.ell * np.log(r)
        return np.where(r > 0.0, out, 0.0)

    def deriv_over_r(self, r):
        """phi'(r)/r, the factor multiplying (x - y) in the gradient."""
        r = np.asarray(r, dtype=np.float64)
        if self.ell % 2 == 1:
            return self.ell * r ** (self.ell - 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = r ** (self.ell - 2) * (self.ell * np.log(r) + 1.0)
        return np.where(r > 0.0, out, 0.0)

    @property
    def min_poly_degree(self) -> int:
        """Least appended degree guaranteeing solvability (conditional
        positive-definiteness order minus one)."""
        return self.ell // 2


def phs_eval(ell: int, r) -> np.ndarray:
    """Basic-function value at distance r (module-level convenience)."""
    return PhsSpec(ell)(r)


def phs_gradient(ell: int, x, y) -> np.ndarray:
    """Gradient of Phi(|x - y|) with respect to x; zero vector at x = y."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    diff = x - y
    r = np.linalg.norm(diff, axis=-1, keepdims=True)
    fac = PhsSpec(ell).deriv_over_r(r)
    return np.where(r > 0.0, fac, 0.0) * diff


@dataclass(frozen=True)
class PolySpec:
    """Total-degree polynomial space in ``dim`` variables."""

    deg: int
    dim: int = 2

    def __post_init__(self):
        if self.deg < 0:
            raise ConfigError("polynomial degree must be >= 0")
        if self.dim not in (2, 3):
            raise ConfigError("polynomial dimension must be 2 or 3")

    @property
    def count(self) -> int:
        return math.comb(self.deg + self.dim, self.dim)

    @property
    def multi_indices(self):
        """Graded ordering of all exponent tuples with |alpha| <= deg."""
        out = []
        for total in range(self.deg + 1):
            for combo in combinations_with_replacement(range(self.dim), total):
                alpha = [0] * self.dim
                for axis in combo:
                    alpha[axis] += 1
                out.append(tuple(alpha))
        return tuple(out)


def check_compatibility(phs: PhsSpec, poly: PolySpec, k: int) -> None:
    """Reject parameter combinations that make the saddle system singular."""
    if poly.deg < phs.min_poly_degree:
        raise ConfigError(
            f"appended degree {poly.deg} too low for phs order {phs.ell}; "
            f"need deg >= {phs.min_poly_degree}"
        )
    if k < poly.count:
        raise ConfigError(
            f"stencil size {k} smaller than the polynomial dimension {poly.count}"
        )


@dataclass
class Stencil:
    """Nodes supporting one element (or one Voronoi cell), nearest first."""

    element_id: int
    node_indices: np.ndarray
    local_origin: np.ndarray
    local_scale: float


def nearest_neighbors(tree: cKDTree, centers: np.ndarray, points: np.ndarray, k: int,
                      extra: int = 0) -> np.ndarray:
    """k (+extra) nearest node indices per center, nearest first.

    Ties broken by the lower node index, deterministically: sort on index
    first, then stable-sort on distance.
    """
    n = len(points)
    kk = min(n, k + extra + 8)
    dist, idx = tree.query(centers, k=kk)
    if kk == 1:
        dist, idx = dist[:, None], idx[:, None]
    order = np.argsort(idx, axis=1, kind="stable")
    dist = np.take_along_axis(dist, order, axis=1)
    idx = np.take_along_axis(idx, order, axis=1)
    order = np.argsort(dist, axis=1, kind="stable")
    idx = np.take_along_axis(idx, order, axis=1)
    return np.ascontiguousarray(idx[:, : min(k + extra, kk)].astype(np.int64))


def stencil_frames(points: np.ndarray, stencil_idx: np.ndarray):
    """Local origin (stencil centroid) and scale (max stencil radius) per row."""
    coords = points[stencil_idx]
    origins = coords.mean(axis=1)
    radii = np.linalg.norm(coords - origins[:, None, :], axis=2)
    scales = radii.max(axis=1)
    if np.any(scales <= 0.0):
        raise SingularSystemError(int(np.argmax(scales <= 0.0)), np.inf, "stencil has zero extent")
    return coords, origins, scales


def build_stencils(centers: np.ndarray, points: np.ndarray, k: int, element_ids=None):
    """Per-center stencils of the k nearest nodes (public, list-of-Stencil form)."""
    tree = cKDTree(points)
    idx = nearest_neighbors(tree, np.atleast_2d(centers), points, k)
    _, origins, scales = stencil_frames(points, idx)
    ids = element_ids if element_ids is not None else range(len(idx))
    return [
        Stencil(element_id=int(e), node_indices=idx[i], local_origin=origins[i], local_scale=float(scales[i]))
        for i, e in enumerate(ids)
    ]


def polynomial_matrix(xhat: np.ndarray, poly: PolySpec) -> np.ndarray:
    """Monomial values at scaled coordinates; xhat has shape (..., k, dim)."""
    cols = []
    for alpha in poly.multi_indices:
        term = np.ones(xhat.shape[:-1])
        for axis, power in enumerate(alpha):
            if power:
                term = term * xhat[..., axis] ** power
        cols.append(term)
    return np.stack(cols, axis=-1)


def polynomial_gradient(xhat: np.ndarray, poly: PolySpec, scale) -> list[np.ndarray]:
    """Gradient of each monomial w.r.t. the *unscaled* coordinates.

    Returns one (..., k, p) array per spatial axis; ``scale`` broadcasts
    against the leading axes.
    """
    scale = np.asarray(scale, dtype=np.float64)
    grads = []
    for axis in range(poly.dim):
        cols = []
        for alpha in poly.multi_indices:
            if alpha[axis] == 0:
                cols.append(np.zeros(xhat.shape[:-1]))
                continue
            term = np.full(xhat.shape[:-1], float(alpha[axis]))
            for ax2, power in enumerate(alpha):
                p = power - 1 if ax2 == axis else power
                if p:
                    term = term * xhat[..., ax2] ** p
            cols.append(term)
        g = np.stack(cols, axis=-1)
        grads.append(g / scale[..., None, None])
    return grads


def assemble_saddle_batch(coords: np.ndarray, origins: np.ndarray, scales: np.ndarray,
                          phs: PhsSpec, poly: PolySpec) -> np.ndarray:
    """Stacked saddle matrices for a batch of stencils: (B, k+p, k+p)."""
    b, k, dim = coords.shape
    p = poly.count
    diff = coords[:, :, None, :] - coords[:, None, :, :]
    amat = phs(np.linalg.norm(diff, axis=3))
    xhat = (coords - origins[:, None, :]) / scales[:, None, None]
    pmat = polynomial_matrix(xhat, poly)
    mats = np.zeros((b, k + p, k + p))
    mats[:, :k, :k] = amat
    mats[:, :k, k:] = pmat
    mats[:, k:, :k] = np.transpose(pmat, (0, 2, 1))
    return mats


def condition_estimates(mats: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """2-norm condition numbers of a stack of small dense matrices."""
    out = np.empty(len(mats))
    for lo in range(0, len(mats), chunk):
        sv = np.linalg.svd(mats[lo : lo + chunk], compute_uv=False)
        out[lo : lo + chunk] = sv[:, 0] / np.maximum(sv[:, -1], 1e-300)
    return out


def solve_saddle_batch(mats: np.ndarray, rhs: np.ndarray, element_ids=None,
                       check_conditioning: bool = True, refine: int = 1) -> np.ndarray:
    """Batched dense solve with one step of iterative refinement.

    ``rhs`` has shape (B, K) or (B, K, nrhs).  Condition estimates above
    1e12 log a warning; above 1e14 the worst offender raises.
    """
    squeeze = rhs.ndim == 2
    if squeeze:
        rhs = rhs[..., None]
    if check_conditioning:
        cond = condition_estimates(mats)
        bad = int(np.argmax(cond))
        if cond[bad] > COND_ERROR:
            eid = element_ids[bad] if element_ids is not None else bad
            raise SingularSystemError(int(eid), float(cond[bad]))
        nwarn = int(np.sum(cond > COND_WARN))
        if nwarn:
            log.warning(
                "%d stencil system(s) poorly conditioned (worst %.3e)", nwarn, float(cond[bad])
            )
    try:
        sol = np.linalg.solve(mats, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(-1, np.inf, f"singular stencil system: {exc}") from exc
    for _ in range(refine):
        resid = rhs - mats @ sol
        sol = sol + np.linalg.solve(mats, resid)
    return sol[..., 0] if squeeze else sol


@dataclass
class SaddleSystem:
    """One assembled local system, carrying its stencil geometry."""

    matrix: np.ndarray
    k: int
    p: int
    element_id: int
    cond_est: float
    centers: np.ndarray
    origin: np.ndarray
    scale: float
    phs: PhsSpec
    poly: PolySpec

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return solve_saddle_batch(
            self.matrix[None], np.asarray(rhs, dtype=np.float64)[None],
            element_ids=[self.element_id], check_conditioning=False,
        )[0]


def assemble_saddle(stencil: Stencil, points: np.ndarray, phs: PhsSpec, poly: PolySpec) -> SaddleSystem:
    """Assemble (and condition-check) the saddle system of a single stencil."""
    check_compatibility(phs, poly, len(stencil.node_indices))
    coords = points[stencil.node_indices][None]
    mats = assemble_saddle_batch(
        coords, stencil.local_origin[None], np.array([stencil.local_scale]), phs, poly
    )
    cond = float(condition_estimates(mats)[0])
    if cond > COND_ERROR:
        raise SingularSystemError(stencil.element_id, cond)
    if cond > COND_WARN:
        log.warning("stencil %d poorly conditioned: %.3e", stencil.element_id, cond)
    return SaddleSystem(
        matrix=mats[0], k=coords.shape[1], p=poly.count, element_id=stencil.element_id,
        cond_est=cond, centers=coords[0].copy(), origin=stencil.local_origin,
        scale=stencil.local_scale, phs=phs, poly=poly,
    )


@dataclass
class LocalInterpolant:
    """RBF + polynomial interpolant fitted on one stencil."""

    centers: np.ndarray
    rbf_coeff: np.ndarray
    poly_coeff: np.ndarray
    origin: np.ndarray
    scale: float
    phs: PhsSpec
    poly: PolySpec

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        r = np.linalg.norm(x[:, None, :] - self.centers[None], axis=2)
        val = self.phs(r) @ self.rbf_coeff
        xhat = (x - self.origin) / self.scale
        val = val + polynomial_matrix(xhat[:, None, :], self.poly)[:, 0, :] @ self.poly_coeff
        return val


def fit_local(system: SaddleSystem, f_values: np.ndarray) -> LocalInterpolant:
    """Solve the saddle system for data on the stencil nodes."""
    f_values = np.asarray(f_values, dtype=np.float64)
    if f_values.shape != (system.k,):
        raise ConfigError(f"expected {system.k} stencil values, got {f_values.shape}")
    rhs = np.concatenate([f_values, np.zeros(system.p)])
    sol = system.solve(rhs)
    return LocalInterpolant(
        centers=system.centers,
        rbf_coeff=sol[: system.k],
        poly_coeff=sol[system.k :],
        origin=system.origin,
        scale=system.scale,
        phs=system.phs,
        poly=system.poly,
    )


def eval_local(interp: LocalInterpolant, x: np.ndarray) -> np.ndarray:
    return interp(x)


class ContinuousProjector:
    """Barycentric blend of per-Voronoi-cell interpolants over a Delaunay mesh.

    Inside triangle (i, j, k) the projected value is
    b_i s_i(x) + b_j s_j(x) + b_k s_k(x) where s_v interpolates the data on
    the stencil of node v.  The blend is continuous across edges and exactly
    interpolates nodal data, so cardinal data produce Lagrange functions.
    """

    def __init__(self, mesh, k: int, phs: PhsSpec = None, poly: PolySpec = None):
        from .geometry.planar import PlanarMesh  # local import to avoid a cycle

        if not isinstance(mesh, PlanarMesh) or mesh._qhull is None:
            raise ConfigError("projector needs a PlanarMesh built by delaunay()")
        self.mesh = mesh
        self.points = mesh.nodes.points
        self.phs = phs or PhsSpec()
        self.poly = poly or PolySpec(deg=self.phs.min_poly_degree, dim=2)
        check_compatibility(self.phs, self.poly, k)
        tree = cKDTree(self.points)
        self.stencil_idx = nearest_neighbors(tree, self.points, self.points, k)
        coords, origins, scales = stencil_frames(self.points, self.stencil_idx)
        self._coords, self._origins, self._scales = coords, origins, scales
        self._mats = assemble_saddle_batch(coords, origins, scales, self.phs, self.poly)
        self._sol = None

    def fit(self, values: np.ndarray) -> "ContinuousProjector":
        values = np.asarray(values, dtype=np.float64)
        k = self.stencil_idx.shape[1]
        rhs = np.zeros((len(self.points), k + self.poly.count))
        rhs[:, :k] = values[self.stencil_idx]
        self._sol = solve_saddle_batch(self._mats, rhs, check_conditioning=False)
        return self

    def _cell_value(self, cell: int, x: np.ndarray) -> float:
        k = self.stencil_idx.shape[1]
        centers = self._coords[cell]
        r = np.linalg.norm(x - centers, axis=1)
        val = float(self.phs(r) @ self._sol[cell, :k])
        xhat = (x - self._origins[cell]) / self._scales[cell]
        pvals = polynomial_matrix(xhat[None, None, :], self.poly)[0, 0]
        return val + float(pvals @ self._sol[cell, k:])

    def eval_in_triangle(self, tri_index: int, x: np.ndarray) -> float:
        """Blend evaluated with an explicitly chosen containing triangle."""
        if self._sol is None:
            raise ConfigError("projector not fitted")
        tri = self.mesh.triangles[tri_index]
        verts = self.points[tri]
        mat = np.column_stack([verts[1] - verts[0], verts[2] - verts[0]])
        loc = np.linalg.solve(mat, np.asarray(x, dtype=np.float64) - verts[0])
        bary = np.array([1.0 - loc.sum(), loc[0], loc[1]])
        return float(sum(bary[v] * self._cell_value(tri[v], x) for v in range(3)))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self._sol is None:
            raise ConfigError("projector not fitted")
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        simp = self.mesh._qhull.find_simplex(x)
        if np.any(simp < 0):
            raise ConfigError("evaluation point outside the triangulated domain")
        # scipy may reorder simplices relative to our CCW copy; map by vertices
        out = np.empty(len(x))
        for row, (xx, s) in enumerate(zip(x, simp)):
            tri = self.mesh._qhull.simplices[s]
            verts = self.points[tri]
            mat = np.column_stack([verts[1] - verts[0], verts[2] - verts[0]])
            loc = np.linalg.solve(mat, xx - verts[0])
            bary = np.array([1.0 - loc.sum(), loc[0], loc[1]])
            out[row] = sum(bary[v] * self._cell_value(tri[v], xx) for v in range(3))
        return out


def projector_eval(projector: ContinuousProjector, x: np.ndarray) -> np.ndarray:
    """Blend evaluation at x (projector must be fitted)."""
    return projector(x)


def lagrange_basis_eval(projector: ContinuousProjector, j: int, x: np.ndarray) -> np.ndarray:
    """The j-th Lagrange function of the projector, evaluated at x.

    Refits the projector to cardinal data; callers looping over j should
    fit once per j and reuse.
    """
    data = np.zeros(len(projector.points))
    data[j] = 1.0
    return projector.fit(data)(x)
