"""Quadrature weights on flat triangulated domains.

Per element E with stencil nodes S(E), the weight vector solves the same
saddle matrix as interpolation but against integrated right-hand sides:

    [ A   P ] [w_E    ]   [ Lphi ]      Lphi_i  = integral over E of Phi(|x - x_i|)
    [ P^T 0 ] [gamma_E] = [ Lpi  ]      Lpi_a   = integral over E of xhat^a

(the matrix is symmetric, so the transposed system is the same system).
gamma_E is discarded; node weights accumulate over elements.

Both right-hand sides use closed forms: monomials via the barycentric
factorial formula, PHS integrals (odd ell) via an edge fan around the
center with a stable secant-power recursion.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, QuadratureError
from .geometry.meshio import FLOAT_FMT
from .interpolate import (
    PhsSpec,
    PolySpec,
    assemble_saddle_batch,
    check_compatibility,
    nearest_neighbors,
    solve_saddle_batch,
    stencil_frames,
)

DEGENERATE_REL_AREA = 1e-14


def _area2(verts):
    """Twice the signed area; verts (..., 3, 2)."""
    e1 = verts[..., 1, :] - verts[..., 0, :]
    e2 = verts[..., 2, :] - verts[..., 0, :]
    return e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0]


# ---------------------------------------------------------------------------
# monomial integrals

def _monomial_term_table(poly: PolySpec):
    """Barycentric expansion of each monomial integral.

    Integral over a triangle of x^p y^q equals
        2A * sum over (a, b) of C(p,a) C(q,b) X^a Y^b (a+b)! / (p+q+2)!
    with multi-factorials over the three vertex exponents.  Returns one
    (n_terms, 7) table per monomial: a0 a1 a2 b0 b1 b2 coeff.
    """
    def compositions3(total):
        return [
            (i, j, total - i - j)
            for i in range(total + 1)
            for j in range(total + 1 - i)
        ]

    tables = []
    for p, q in poly.multi_indices:
        rows = []
        denom = math.factorial(p + q + 2)
        for a in compositions3(p):
            ca = math.factorial(p) // (math.factorial(a[0]) * math.factorial(a[1]) * math.factorial(a[2]))
            for b in compositions3(q):
                cb = math.factorial(q) // (math.factorial(b[0]) * math.factorial(b[1]) * math.factorial(b[2]))
                num = math.factorial(a[0] + b[0]) * math.factorial(a[1] + b[1]) * math.factorial(a[2] + b[2])
                rows.append((*a, *b, ca * cb * num / denom))
        tables.append(np.array(rows))
    return tables


def monomial_integrals_batch(verts: np.ndarray, origins: np.ndarray, scales: np.ndarray,
                             poly: PolySpec) -> np.ndarray:
    """Integrals of ((x - origin)/scale)^alpha over each triangle, (B, p).

    Exact for every monomial (closed form); areas measured in the raw frame.
    """
    area2 = _area2(verts)
    xhat = (verts - origins[:, None, :]) / scales[:, None, None]
    xv, yv = xhat[..., 0], xhat[..., 1]
    out = np.empty((len(verts), poly.count))
    for col, table in enumerate(_monomial_term_table(poly)):
        acc = np.zeros(len(verts))
        for a0, a1, a2, b0, b1, b2, coeff in table:
            acc += coeff * (
                xv[:, 0] ** a0 * xv[:, 1] ** a1 * xv[:, 2] ** a2
                * yv[:, 0] ** b0 * yv[:, 1] ** b1 * yv[:, 2] ** b2
            )
        out[:, col] = area2 * acc
    return out


def tri_monomial_integral(alpha, triangle, origin=(0.0, 0.0), scale=1.0) -> float:
    """Exact integral of ((x-origin)/scale)^alpha over one planar triangle."""
    verts = np.asarray(triangle, dtype=np.float64).reshape(1, 3, 2)
    area2 = float(_area2(verts)[0])
    if abs(area2) < 2.0 * DEGENERATE_REL_AREA * scale**2:
        raise QuadratureError(f"degenerate triangle, area {abs(area2) / 2:.3e}")
    poly = PolySpec(deg=int(sum(alpha)), dim=2)
    col = poly.multi_indices.index(tuple(int(a) for a in alpha))
    vals = monomial_integrals_batch(
        verts, np.asarray(origin, dtype=np.float64)[None], np.array([float(scale)]), poly
    )
    return float(vals[0, col])


# ---------------------------------------------------------------------------
# PHS integrals, odd ell: closed form via an edge fan around the center

def _secant_power_primitive(t: np.ndarray, h: np.ndarray, m: int) -> np.ndarray:
    """T_m(t) = integral from 0 to t of h * (s^2 + h^2)^((m-2)/2) ds, odd m.

    Upward recursion in m; T_1 = h * asinh(t/h).  h > 0 required.
    """
    if m % 2 == 0:
        raise ValueError("recursion is for odd exponents only")
    val = h * np.arcsinh(t / h)
    if m == 1:
        return val
    r = np.hypot(t, h)
    for mm in range(3, m + 1, 2):
        val = (t * r ** (mm - 2) * h + h * h * (mm - 2) * val) / (mm - 1)
    return val


def phs_integrals_batch(verts: np.ndarray, centers: np.ndarray, ell: int) -> np.ndarray:
    """Integral over each triangle of |x - c|^ell for each center, batched.

    verts: (B, 3, 2); centers: (B, K, 2) -> (B, K).  Fan decomposition: for
    each directed edge p->q of the (CCW) triangle the wedge (c, p, q)
    contributes sign(d)/(ell+2) * [T_{ell+2}(t_q) - T_{ell+2}(t_p)] where
    d is the signed distance from c to the edge line and t the tangential
    coordinates about the perpendicular foot.
    """
    if ell % 2 == 0:
        raise ConfigError("closed-form PHS element integrals require odd ell")
    total = np.zeros(centers.shape[:2])
    for a in range(3):
        p = verts[:, a, :][:, None, :]
        q = verts[:, (a + 1) % 3, :][:, None, :]
        edge = q - p
        length = np.linalg.norm(edge, axis=2, keepdims=True)
        if np.any(length == 0.0):
            raise QuadratureError("degenerate triangle edge of zero length")
        ehat = edge / length
        cp = centers - p
        # signed normal distance: positive when c lies left of p->q
        d = ehat[..., 0] * cp[..., 1] - ehat[..., 1] * cp[..., 0]
        t_p = -(cp[..., 0] * ehat[..., 0] + cp[..., 1] * ehat[..., 1])
        t_q = t_p + length[..., 0]
        h = np.abs(d)
        safe_h = np.where(h > 0.0, h, 1.0)
        wedge = (
            _secant_power_primitive(t_q, safe_h, ell + 2)
            - _secant_power_primitive(t_p, safe_h, ell + 2)
        ) / (ell + 2)
        total += np.where(h > 0.0, np.sign(d) * wedge, 0.0)
    return total


def tri_phs_integral(center, triangle, ell: int = 3) -> float:
    """Integral of |x - center|^ell over one planar triangle (odd ell)."""
    verts = np.asarray(triangle, dtype=np.float64).reshape(1, 3, 2)
    area2 = _area2(verts)
    scale = float(np.abs(verts - verts.mean(axis=1, keepdims=True)).max())
    if abs(float(area2[0])) < 2.0 * DEGENERATE_REL_AREA * max(scale, 1.0) ** 2:
        raise QuadratureError(f"degenerate triangle, area {abs(float(area2[0])) / 2:.3e}")
    if area2[0] < 0.0:
        verts = verts[:, ::-1, :]
    c = np.asarray(center, dtype=np.float64).reshape(1, 1, 2)
    return float(phs_integrals_batch(verts, c, ell)[0, 0])


def tri_phs_integral_subdivide(center, triangle, ell: int = 3, tol: float = 1e-13,
                               max_depth: int = 24) -> float:
    """Adaptive-subdivision fallback for even ell (and a slow cross-check).

    Recursively quarters the triangle at edge midpoints, comparing a 7-point
    degree-5 symmetric rule against its refinement.
    """
    phs = PhsSpec(ell)
    c = np.asarray(center, dtype=np.float64)

    bary = np.array([
        [1 / 3, 1 / 3, 1 / 3],
        [0.79742698535308732, 0.10128650732345634, 0.10128650732345634],
        [0.10128650732345634, 0.79742698535308732, 0.10128650732345634],
        [0.10128650732345634, 0.10128650732345634, 0.79742698535308732],
        [0.05971587178976982, 0.47014206410511509, 0.47014206410511509],
        [0.47014206410511509, 0.05971587178976982, 0.47014206410511509],
        [0.47014206410511509, 0.47014206410511509, 0.05971587178976982],
    ])
    wts = np.array([0.225,
                    0.12593918054482715, 0.12593918054482715, 0.12593918054482715,
                    0.13239415278850618, 0.13239415278850618, 0.13239415278850618])

    def rule(v):
        pts = bary @ v
        area = abs(_area2(v[None])[0]) / 2.0
        return area * float(wts @ phs(np.linalg.norm(pts - c, axis=1)))

    def quarter(v):
        m01, m12, m20 = (v[0] + v[1]) / 2, (v[1] + v[2]) / 2, (v[2] + v[0]) / 2
        return [np.array([v[0], m01, m20]), np.array([m01, v[1], m12]),
                np.array([m20, m12, v[2]]), np.array([m01, m12, m20])]

    verts0 = np.asarray(triangle, dtype=np.float64).reshape(3, 2)
    scale = float(np.abs(verts0 - verts0.mean(axis=0)).max())
    budget = tol * max(abs(_area2(verts0[None])[0]) / 2.0, 1e-300) * max(
        float(phs(np.linalg.norm(verts0 - c, axis=1)).max()), 1.0
    )

    def recurse(v, coarse, depth, budget):
        fine = sum(rule(child) for child in quarter(v))
        if abs(fine - coarse) <= budget or depth >= max_depth:
            return fine
        return sum(
            recurse(child, rule(child), depth + 1, budget / 4.0)
            for child in quarter(v)
        )

    return recurse(verts0, rule(verts0), 0, budget)


# ---------------------------------------------------------------------------
# rule assembly

@dataclass
class QuadratureRule:
    """Nodal weights for one fixed node set.

    ``node_indices`` is the full 0..n-1 range for rules built here; kept
    explicit so subsetted or merged rules stay representable.
    """

    node_indices: np.ndarray
    weights: np.ndarray
    domain_measure: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.node_indices = np.asarray(self.node_indices, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.node_indices.shape != self.weights.shape:
            raise ConfigError("node index / weight length mismatch")
        if not np.all(np.isfinite(self.weights)):
            raise QuadratureError("non-finite quadrature weights")

    def __len__(self):
        return len(self.weights)

    def stability_ratio(self) -> float:
        """(sum|w| - sum w) / sum w; zero iff all weights nonnegative."""
        s = float(self.weights.sum())
        return (float(np.abs(self.weights).sum()) - s) / s

    def negative_count(self) -> int:
        return int(np.sum(self.weights < 0.0))


def element_weights(element_verts, stencil, system) -> np.ndarray:
    """Weights of one element on its stencil nodes.

    Solves the (symmetric, hence self-transposed) saddle system against the
    integrated right-hand side [Lphi; Lpi] and discards the polynomial dual
    block.  The batched driver below is what flat_rule uses; this is the
    single-element reference path.
    """
    verts = np.asarray(element_verts, dtype=np.float64).reshape(1, 3, 2)
    if _area2(verts)[0] < 0.0:
        verts = verts[:, ::-1, :]
    lphi = phs_integrals_batch(verts, system.centers[None], system.phs.ell)[0]
    lpi = monomial_integrals_batch(
        verts, system.origin[None], np.array([system.scale]), system.poly
    )[0]
    sol = system.solve(np.concatenate([lphi, lpi]))
    return sol[: system.k]


def flat_element_weights_batch(verts, stencil_idx, points, phs: PhsSpec, poly: PolySpec,
                               chunk: int = 512, element_offset: int = 0):
    """Per-element stencil weights for a batch of planar triangles.

    Returns (B, k) weights aligned with stencil_idx rows.
    """
    m, k = stencil_idx.shape
    verts = np.asarray(verts, dtype=np.float64)
    flip = _area2(verts) < 0.0
    if np.any(flip):
        verts = verts.copy()
        verts[flip] = verts[flip][:, ::-1, :]
    out = np.empty((m, k))
    for lo in range(0, m, chunk):
        hi = min(lo + chunk, m)
        idx = stencil_idx[lo:hi]
        coords, origins, scales = stencil_frames(points, idx)
        mats = assemble_saddle_batch(coords, origins, scales, phs, poly)
        lphi = phs_integrals_batch(verts[lo:hi], coords, phs.ell)
        lpi = monomial_integrals_batch(verts[lo:hi], origins, scales, poly)
        rhs = np.concatenate([lphi, lpi], axis=1)
        sol = solve_saddle_batch(
            mats, rhs, element_ids=np.arange(lo, hi) + element_offset
        )
        out[lo:hi] = sol[:, :k]
    return out


def assemble_rule(n_nodes: int, stencil_idx: np.ndarray, elem_weights: np.ndarray,
                  domain_measure: float, provenance=None) -> QuadratureRule:
    """Accumulate per-element weights onto nodes, ascending element order."""
    weights = np.zeros(n_nodes)
    # bincount sums in index order per bucket; contributions were generated
    # in ascending element order so the reduction is deterministic
    np.add.at(weights, stencil_idx.ravel(), elem_weights.ravel())
    return QuadratureRule(
        node_indices=np.arange(n_nodes),
        weights=weights,
        domain_measure=float(domain_measure),
        provenance=dict(provenance or {}),
    )


def flat_rule(mesh, k: int = 21, phs: PhsSpec = None, poly: PolySpec = None,
              chunk: int = 512) -> QuadratureRule:
    """RBF quadrature rule for a planar triangulation."""
    from scipy.spatial import cKDTree

    from .geometry.planar import triangle_areas

    phs = phs or PhsSpec()
    poly = poly or PolySpec(deg=2, dim=2)
    points = mesh.nodes.points
    check_compatibility(phs, poly, k)
    if k > len(points):
        raise ConfigError(f"stencil size {k} exceeds node count {len(points)}")
    tree = cKDTree(points)
    stencil_idx = nearest_neighbors(tree, mesh.centroids, points, k)
    verts = points[mesh.triangles]
    elem_w = flat_element_weights_batch(verts, stencil_idx, points, phs, poly, chunk=chunk)
    measure = float(triangle_areas(mesh).sum())
    prov = {
        "ell": phs.ell,
        "deg": poly.deg,
        "k": k,
        "n_nodes": len(points),
        "n_elements": mesh.n_elements,
    }
    return assemble_rule(len(points), stencil_idx, elem_w, measure, prov)


def apply_rule(rule: QuadratureRule, f_values: np.ndarray, compensated: bool = False) -> float:
    """Quadrature value w . f, optionally with compensated summation."""
    f_values = np.asarray(f_values, dtype=np.float64)
    if f_values.shape != rule.weights.shape:
        raise ConfigError(
            f"value vector length {f_values.shape} does not match rule {rule.weights.shape}"
        )
    if compensated:
        return math.fsum(rule.weights * f_values)
    return float(rule.weights @ f_values)


# ---------------------------------------------------------------------------
# serialization

def write_rule_csv(rule: QuadratureRule, path) -> None:
    """CSV of node_index,weight plus a .json provenance sidecar."""
    path = str(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_index", "weight"])
        for i, w in zip(rule.node_indices, rule.weights):
            writer.writerow([int(i), FLOAT_FMT % w])
    sidecar = {
        "domain_measure": FLOAT_FMT % rule.domain_measure,
        "provenance": {key: val for key, val in sorted(rule.provenance.items())},
    }
    with open(path + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_rule_csv(path) -> QuadratureRule:
    path = str(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["node_index", "weight"]:
            raise ConfigError(f"unexpected rule CSV header: {header}")
        idx, w = [], []
        for row in reader:
            idx.append(int(row[0]))
            w.append(float(row[1]))
    try:
        with open(path + ".json") as fh:
            sidecar = json.load(fh)
        measure = float(sidecar["domain_measure"])
        prov = sidecar.get("provenance", {})
    except FileNotFoundError:
        measure = float(np.sum(w))
        prov = {}
    return QuadratureRule(
        node_indices=np.array(idx, dtype=np.int64),
        weights=np.array(w, dtype=np.float64),
        domain_measure=measure,
        provenance=prov,
    )
